//! Seeded synthetic collections with a known minimax center and order.
//!
//! Two models are provided. The nested-ball model draws most points from the
//! boundary of a large ball around `Z1` and the rest from a small ball around
//! `Z2` strictly inside it, so `Z1` stays the center even though the extrinsic
//! mean is pulled toward `Z2`. The arc model samples a ball uniformly and then
//! densely along one boundary arc. Radii are squared-chordal distances.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GmebError, Result};
use crate::grassmann::{orthonormalize, Basis, SubspaceCollection, COMPLETION_RANK_TOL};

/// Redraws allowed before a tangent direction is declared unreachable.
const MAX_ATTEMPTS: usize = 1000;

const STREAM_CENTERS: u64 = 1;
const STREAM_ITEMS: u64 = 2;
const STREAM_DIMS: u64 = 3;
const STREAM_COMPLETION: u64 = 4;
const STREAM_NOISE: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    NestedBall,
    Arc,
    /// Independent uniform subspaces with no common part.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    Boundary,
    Interior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    LargeBoundary,
    SmallBall,
    ArcBoundary,
    Interior,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub model: Model,
    pub n: usize,
    /// Dimension of the large-ball center (the planted order).
    pub k0: usize,
    /// Dimension of the small-ball center when it lives on a larger Grassmannian.
    pub k2: Option<usize>,
    pub eps1: f64,
    pub eps2: f64,
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    /// Completed dimensions; each item draws uniformly from the entries at
    /// least as large as its own dimension. Empty means no completion.
    pub dims: Vec<usize>,
    pub orthogonal_completion: bool,
    /// Put small-ball points on the boundary rather than the interior.
    pub small_ball_boundary: bool,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            model: Model::NestedBall,
            n: 10,
            k0: 3,
            k2: None,
            eps1: 1.0,
            eps2: 0.125,
            m1: 70,
            m2: 30,
            m3: 0,
            dims: Vec::new(),
            orthogonal_completion: false,
            small_ball_boundary: true,
            snr_db: None,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn total(&self) -> usize {
        self.m1 + self.m2 + self.m3
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GmebError::InvalidConfig(msg));
        if self.total() == 0 {
            return bad("dataset needs at least one item".into());
        }
        if self.n < 2 {
            return bad(format!("ambient dimension {} is too small", self.n));
        }
        if let Some(&p) = self.dims.iter().find(|&&p| p == 0 || p > self.n) {
            return bad(format!("completed dimension {p} outside 1..={}", self.n));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() || snr == f64::NEG_INFINITY {
                return bad("snr_db must be a number or +inf".into());
            }
        }
        if self.model == Model::Random {
            if self.dims.is_empty() {
                return bad("random model needs a dimension list".into());
            }
            return Ok(());
        }
        if self.k0 == 0 || self.k0 >= self.n {
            return bad(format!("k0 = {} outside 1..{}", self.k0, self.n));
        }
        if !(self.eps1 > 0.0 && self.eps1 <= self.k0 as f64) {
            return bad(format!("eps1 = {} outside (0, {}]", self.eps1, self.k0));
        }
        if self.model == Model::NestedBall && self.m2 > 0 {
            let k2 = self.k2.unwrap_or(self.k0);
            if k2 < self.k0 || k2 >= self.n {
                return bad(format!("k2 = {k2} outside {}..{}", self.k0, self.n));
            }
            if k2 != self.k0 && self.orthogonal_completion {
                return bad("orthogonal completion needs all centers on one Grassmannian".into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DatasetItem {
    pub provenance: Provenance,
    /// Basis before completion and noise.
    pub core: Basis,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub collection: SubspaceCollection,
    /// `None` for the random model.
    pub truth_center: Option<Basis>,
    pub truth_k: usize,
    pub items: Vec<DatasetItem>,
}

/// Derives an independent sub-seed so each item owns its random stream.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Removes the components of `m` in the column spaces of the `against` bases.
fn project_out(mut m: DMatrix<f64>, against: &[&DMatrix<f64>]) -> DMatrix<f64> {
    // Two passes keep the result orthogonal to working precision.
    for _ in 0..2 {
        for a in against {
            m -= *a * (a.transpose() * &m);
        }
    }
    m
}

/// Uniformly distributed point of Gr(k, n).
pub fn random_basis<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Basis> {
    if k == 0 || k > n {
        return Err(GmebError::InvalidArgument(format!("cannot draw a {k}-plane in R^{n}")));
    }
    loop {
        match orthonormalize(&gaussian(n, k, rng), COMPLETION_RANK_TOL) {
            Ok(b) => return Ok(b),
            Err(GmebError::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Moves from `center` along the geodesic with initial direction `delta`
/// (horizontal, `centerᵀΔ = 0`) until the squared-chordal distance equals
/// `target`. Returns `None` when the direction saturates first.
pub fn geodesic_to_distance(center: &Basis, delta: &DMatrix<f64>, target: f64) -> Result<Option<Basis>> {
    let z = center.matrix();
    if delta.nrows() != z.nrows() || delta.ncols() != z.ncols() {
        return Err(GmebError::InvalidArgument("tangent shape does not match the center".into()));
    }
    let svd = delta.clone().svd(true, true);
    let (p, q_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
    let sigma = svd.singular_values;
    let top = sigma.max();
    if !(top > 0.0) {
        return Ok(None);
    }
    let phi: Vec<f64> = sigma.iter().map(|s| s / top).collect();
    let dist = |t: f64| phi.iter().map(|f| (f * t).sin().powi(2)).sum::<f64>();
    let half_pi = std::f64::consts::FRAC_PI_2;
    if dist(half_pi) < target {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, half_pi);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if dist(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let k = z.ncols();
    let cos = DMatrix::from_fn(k, k, |i, j| if i == j { (phi[i] * t).cos() } else { 0.0 });
    let sin = DMatrix::from_fn(k, k, |i, j| if i == j { (phi[i] * t).sin() } else { 0.0 });
    let x = z * q_t.transpose() * cos + p * sin;
    orthonormalize(&x, COMPLETION_RANK_TOL).map(Some)
}

fn check_radius(center: &Basis, radius: f64) -> Result<()> {
    let max = center.p() as f64;
    // Distance k needs every principal angle at π/2 at once, which a random
    // tangent only reaches for lines.
    let limit = if center.p() == 1 { max } else { max - 1e-12 };
    if radius > limit {
        return Err(GmebError::RadiusTooLarge { radius, max });
    }
    if !(radius >= 0.0) {
        return Err(GmebError::InvalidArgument(format!("radius {radius} must be nonnegative")));
    }
    if center.p() >= center.n() {
        return Err(GmebError::FullSpace { n: center.n() });
    }
    Ok(())
}

/// One point at squared-chordal distance `target` from `center`, with the
/// tangent kept orthogonal to `avoid`.
fn sample_at<R: Rng + ?Sized>(center: &Basis, target: f64, avoid: Option<&DMatrix<f64>>, rng: &mut R) -> Result<Basis> {
    let (n, k) = (center.n(), center.p());
    for _ in 0..MAX_ATTEMPTS {
        let mut against = vec![center.matrix()];
        against.extend(avoid);
        let delta = project_out(gaussian(n, k, rng), &against);
        if let Some(x) = geodesic_to_distance(center, &delta, target)? {
            return Ok(x);
        }
    }
    Err(GmebError::RadiusTooLarge { radius: target, max: k as f64 })
}

fn radius_for<R: Rng + ?Sized>(center: &Basis, radius: f64, placement: Placement, rng: &mut R) -> f64 {
    match placement {
        Placement::Boundary => radius,
        Placement::Interior => {
            let dof = (center.p() * (center.n() - center.p())) as f64;
            radius * rng.random::<f64>().powf(1.0 / dof)
        }
    }
}

/// Draws `count` points on the boundary of, or inside, the squared-chordal
/// ball of `radius` around `center`.
pub fn sample_ball<R: Rng + ?Sized>(
    center: &Basis,
    radius: f64,
    placement: Placement,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Basis>> {
    check_radius(center, radius)?;
    (0..count)
        .map(|_| {
            let target = radius_for(center, radius, placement, rng);
            sample_at(center, target, None, rng)
        })
        .collect()
}

/// Mutually orthogonal directions handed out to items in order.
#[derive(Clone, Debug)]
pub struct CompletionPool {
    directions: DMatrix<f64>,
    next: usize,
}

impl CompletionPool {
    /// `size` random orthonormal directions orthogonal to `against`.
    pub fn new<R: Rng + ?Sized>(n: usize, size: usize, against: &[&DMatrix<f64>], rng: &mut R) -> Result<Self> {
        let used: usize = against.iter().map(|a| a.ncols()).sum();
        if used + size > n {
            return Err(GmebError::PoolExhausted { needed: size, available: n.saturating_sub(used) });
        }
        if size == 0 {
            return Ok(Self { directions: DMatrix::zeros(n, 0), next: 0 });
        }
        let basis = orthonormalize(&project_out(gaussian(n, size, rng), against), COMPLETION_RANK_TOL)?;
        let directions = project_out(basis.into_matrix(), against);
        Ok(Self { directions, next: 0 })
    }

    pub fn directions(&self) -> &DMatrix<f64> {
        &self.directions
    }

    pub fn remaining(&self) -> usize {
        self.directions.ncols() - self.next
    }

    fn take(&mut self, count: usize) -> Result<DMatrix<f64>> {
        if count > self.remaining() {
            return Err(GmebError::PoolExhausted { needed: count, available: self.remaining() });
        }
        let cols = self.directions.columns(self.next, count).into_owned();
        self.next += count;
        Ok(cols)
    }
}

/// Extends `core` to a `p`-dimensional basis containing it. Added directions
/// come from `pool` when given, otherwise they are Gaussian.
pub fn complete_basis<R: Rng + ?Sized>(
    core: &Basis,
    p: usize,
    pool: Option<&mut CompletionPool>,
    rng: &mut R,
) -> Result<Basis> {
    let k = core.p();
    if p < k || p > core.n() {
        return Err(GmebError::InvalidArgument(format!("cannot complete a {k}-plane to dimension {p}")));
    }
    if p == k {
        return Ok(core.clone());
    }
    let extra = match pool {
        Some(pool) => pool.take(p - k)?,
        None => project_out(gaussian(core.n(), p - k, rng), &[core.matrix()]),
    };
    let mut joined = DMatrix::zeros(core.n(), p);
    joined.columns_mut(0, k).copy_from(core.matrix());
    joined.columns_mut(k, p - k).copy_from(&extra);
    orthonormalize(&joined, COMPLETION_RANK_TOL)
}

/// Total noise variance for a planted order at the given SNR.
pub fn noise_variance(snr_db: f64, truth_k: usize) -> f64 {
    truth_k as f64 / 10f64.powf(snr_db / 10.0)
}

/// Adds one item's Gaussian noise, scaled so its total power is `sigma2`,
/// then re-orthonormalizes.
pub fn perturb_basis<R: Rng + ?Sized>(x: &Basis, sigma2: f64, rng: &mut R) -> Result<Basis> {
    let noisy = x.matrix() + noise_matrix(x.n(), x.p(), sigma2, rng);
    orthonormalize(&noisy, COMPLETION_RANK_TOL)
}

/// Gaussian n×p matrix with expected squared Frobenius norm `sigma2`.
pub fn noise_matrix<R: Rng + ?Sized>(n: usize, p: usize, sigma2: f64, rng: &mut R) -> DMatrix<f64> {
    gaussian(n, p, rng) * (sigma2 / (n * p) as f64).sqrt()
}

pub fn add_noise<R: Rng + ?Sized>(
    collection: &SubspaceCollection,
    snr_db: f64,
    truth_k: usize,
    rng: &mut R,
) -> Result<SubspaceCollection> {
    if snr_db == f64::INFINITY {
        return Ok(collection.clone());
    }
    if !snr_db.is_finite() {
        return Err(GmebError::InvalidArgument(format!("snr_db = {snr_db} is not finite")));
    }
    let sigma2 = noise_variance(snr_db, truth_k);
    let items = collection.iter().map(|x| perturb_basis(x, sigma2, rng)).collect::<Result<Vec<_>>>()?;
    SubspaceCollection::new(items)
}

/// Unit-norm log-map direction at `center` pointing toward `x`.
fn log_direction(center: &Basis, x: &Basis) -> Option<DMatrix<f64>> {
    let z = center.matrix();
    let a = z.transpose() * x.matrix();
    let b = x.matrix() - z * &a;
    let c = b * a.try_inverse()?;
    let svd = c.svd(true, true);
    let atan = DMatrix::from_fn(svd.singular_values.len(), svd.singular_values.len(), |i, j| {
        if i == j {
            svd.singular_values[i].atan()
        } else {
            0.0
        }
    });
    let tangent = svd.u? * atan * svd.v_t?;
    let norm = tangent.norm();
    (norm > 1e-12).then(|| tangent / norm)
}

fn choose_dims(spec: &DatasetSpec, own: &[usize]) -> Result<Vec<usize>> {
    if spec.dims.is_empty() {
        return Ok(own.to_vec());
    }
    own.iter()
        .enumerate()
        .map(|(i, &k)| {
            let options: Vec<usize> = spec.dims.iter().copied().filter(|&p| p >= k).collect();
            if options.is_empty() {
                return Err(GmebError::InvalidConfig(format!("no completed dimension is at least {k}")));
            }
            let mut rng = stream_rng(spec.seed, STREAM_DIMS, i as u64);
            Ok(options[rng.random_range(0..options.len())])
        })
        .collect()
}

struct Planted {
    centers: Vec<Basis>,
    /// Directions every tangent must avoid (the orthogonal completion pool).
    pool: Option<CompletionPool>,
}

fn finish(
    spec: &DatasetSpec,
    truth_center: Option<Basis>,
    truth_k: usize,
    items: Vec<DatasetItem>,
    dims: &[usize],
    mut pool: Option<CompletionPool>,
) -> Result<Dataset> {
    let sigma2 = spec.snr_db.filter(|s| s.is_finite()).map(|s| noise_variance(s, truth_k));
    let mut bases = Vec::with_capacity(items.len());
    for (i, (item, &p)) in items.iter().zip(dims).enumerate() {
        let mut rng = stream_rng(spec.seed, STREAM_COMPLETION, i as u64);
        let mut x = complete_basis(&item.core, p, pool.as_mut(), &mut rng)?;
        if let Some(s2) = sigma2 {
            let mut rng = stream_rng(spec.seed, STREAM_NOISE, i as u64);
            x = perturb_basis(&x, s2, &mut rng)?;
        }
        bases.push(x);
    }
    Ok(Dataset { spec: spec.clone(), collection: SubspaceCollection::new(bases)?, truth_center, truth_k, items })
}

fn item_rng(spec: &DatasetSpec, index: usize) -> ChaCha8Rng {
    stream_rng(spec.seed, STREAM_ITEMS, index as u64)
}

#[allow(clippy::too_many_arguments)]
fn sample_items(
    spec: &DatasetSpec,
    offset: usize,
    count: usize,
    center: &Basis,
    radius: f64,
    placement: Placement,
    avoid: Option<&DMatrix<f64>>,
    provenance: Provenance,
) -> Result<Vec<DatasetItem>> {
    check_radius(center, radius)?;
    (offset..offset + count)
        .map(|i| {
            let mut rng = item_rng(spec, i);
            let target = radius_for(center, radius, placement, &mut rng);
            let core = sample_at(center, target, avoid, &mut rng)?;
            Ok(DatasetItem { provenance, core })
        })
        .collect()
}

/// Places the planted centers, and the completion pool when requested.
fn plant_nested(spec: &DatasetSpec, own_dims: &[usize], dims: &[usize]) -> Result<Planted> {
    let mut rng = stream_rng(spec.seed, STREAM_CENTERS, 0);
    let z1 = random_basis(spec.n, spec.k0, &mut rng)?;
    let pool = if spec.orthogonal_completion && !spec.dims.is_empty() {
        let needed: usize = dims.iter().zip(own_dims).map(|(p, k)| p - k).sum();
        // One free direction must remain for the sampling tangents.
        let available = spec.n - spec.k0 - 1;
        if needed > available {
            return Err(GmebError::PoolExhausted { needed, available });
        }
        Some(CompletionPool::new(spec.n, needed, &[z1.matrix()], &mut rng)?)
    } else {
        None
    };
    let mut centers = vec![z1];
    if spec.m2 > 0 {
        centers.push(place_small_center(spec, &centers[0], pool.as_ref().map(|p| p.directions()), &mut rng)?);
    }
    Ok(Planted { centers, pool })
}

fn place_small_center<R: Rng + ?Sized>(
    spec: &DatasetSpec,
    z1: &Basis,
    avoid: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> Result<Basis> {
    let (r1, r2) = (spec.eps1.sqrt(), spec.eps2.sqrt());
    let k2 = spec.k2.unwrap_or(spec.k0);
    if spec.eps2 <= 0.0 || spec.eps2 >= spec.eps1 {
        return Err(GmebError::InfeasiblePlacement(format!(
            "eps2 = {} must lie strictly between 0 and eps1 = {}",
            spec.eps2, spec.eps1
        )));
    }
    if k2 == spec.k0 {
        // Z1 must stay outside the small ball while the small ball stays
        // inside the large one, which needs a shell of chordal width > 0.
        if r1 <= 2.0 * r2 {
            return Err(GmebError::InfeasiblePlacement(format!(
                "eps1 = {} leaves no room for a ball of radius {} excluding Z1",
                spec.eps1, spec.eps2
            )));
        }
        let rho = r2 + 0.9 * (r1 - 2.0 * r2);
        return sample_at(z1, rho * rho, avoid, rng);
    }
    let rho = 0.9 * (r1 - r2);
    let c = sample_at(z1, rho * rho, avoid, rng)?;
    let extra = project_out(gaussian(spec.n, k2 - spec.k0, rng), &[z1.matrix(), c.matrix()]);
    let mut joined = DMatrix::zeros(spec.n, k2);
    joined.columns_mut(0, spec.k0).copy_from(c.matrix());
    joined.columns_mut(spec.k0, k2 - spec.k0).copy_from(&extra);
    orthonormalize(&joined, COMPLETION_RANK_TOL)
}

pub fn nested_ball_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let k2 = spec.k2.unwrap_or(spec.k0);
    let mut own = vec![spec.k0; spec.m1];
    own.extend(std::iter::repeat_n(k2, spec.m2));
    own.extend(std::iter::repeat_n(spec.k0, spec.m3));
    let dims = choose_dims(spec, &own)?;
    let planted = plant_nested(spec, &own, &dims)?;
    let avoid = planted.pool.as_ref().map(|p| p.directions());
    let z1 = &planted.centers[0];

    let mut items = sample_items(spec, 0, spec.m1, z1, spec.eps1, Placement::Boundary, avoid, Provenance::LargeBoundary)?;
    if let Some(z2) = planted.centers.get(1) {
        let placement = if spec.small_ball_boundary { Placement::Boundary } else { Placement::Interior };
        items.extend(sample_items(spec, spec.m1, spec.m2, z2, spec.eps2, placement, avoid, Provenance::SmallBall)?);
    }
    items.extend(sample_items(
        spec,
        spec.m1 + spec.m2,
        spec.m3,
        z1,
        spec.eps1,
        Placement::Interior,
        avoid,
        Provenance::Interior,
    )?);
    let truth = planted.centers[0].clone();
    finish(spec, Some(truth), spec.k0, items, &dims, planted.pool)
}

pub fn arc_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let own = vec![spec.k0; spec.total()];
    let dims = choose_dims(spec, &own)?;
    let mut rng = stream_rng(spec.seed, STREAM_CENTERS, 0);
    let z1 = random_basis(spec.n, spec.k0, &mut rng)?;
    let pool = if spec.orthogonal_completion && !spec.dims.is_empty() {
        let needed: usize = dims.iter().map(|p| p - spec.k0).sum();
        let available = spec.n - spec.k0 - 1;
        if needed > available {
            return Err(GmebError::PoolExhausted { needed, available });
        }
        Some(CompletionPool::new(spec.n, needed, &[z1.matrix()], &mut rng)?)
    } else {
        None
    };
    let avoid = pool.as_ref().map(|p| p.directions());

    let mut items = sample_items(spec, 0, spec.m1, &z1, spec.eps1, Placement::Boundary, avoid, Provenance::LargeBoundary)?;
    if spec.m2 > 0 {
        let (ua, ub, omega) = arc_endpoints(spec, &z1, avoid, &mut rng)?;
        for i in spec.m1..spec.m1 + spec.m2 {
            let mut rng = item_rng(spec, i);
            let core = sample_arc_point(&z1, spec.eps1, &ua, &ub, omega, &mut rng)?;
            items.push(DatasetItem { provenance: Provenance::ArcBoundary, core });
        }
    }
    items.extend(sample_items(
        spec,
        spec.m1 + spec.m2,
        spec.m3,
        &z1,
        spec.eps1,
        Placement::Interior,
        avoid,
        Provenance::Interior,
    )?);
    finish(spec, Some(z1), spec.k0, items, &dims, pool)
}

/// Two boundary anchors as unit tangents at `z1`, plus the angle between them.
fn arc_endpoints<R: Rng + ?Sized>(
    spec: &DatasetSpec,
    z1: &Basis,
    avoid: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    for _ in 0..MAX_ATTEMPTS {
        let a = sample_at(z1, spec.eps1, avoid, rng)?;
        let b = sample_at(z1, spec.eps1, avoid, rng)?;
        if let (Some(ua), Some(ub)) = (log_direction(z1, &a), log_direction(z1, &b)) {
            let omega = ua.dot(&ub).clamp(-1.0, 1.0).acos();
            if omega > 1e-6 && omega < std::f64::consts::PI - 1e-6 {
                return Ok((ua, ub, omega));
            }
        }
    }
    Err(GmebError::InfeasiblePlacement("could not draw two distinct arc anchors".into()))
}

fn sample_arc_point<R: Rng + ?Sized>(
    z1: &Basis,
    radius: f64,
    ua: &DMatrix<f64>,
    ub: &DMatrix<f64>,
    omega: f64,
    rng: &mut R,
) -> Result<Basis> {
    for _ in 0..MAX_ATTEMPTS {
        let s: f64 = rng.random();
        let direction = (ua * ((1.0 - s) * omega).sin() + ub * (s * omega).sin()) / omega.sin();
        if let Some(x) = geodesic_to_distance(z1, &direction, radius)? {
            return Ok(x);
        }
    }
    Err(GmebError::RadiusTooLarge { radius, max: z1.p() as f64 })
}

/// Independent uniform subspaces; the planted order is 0.
pub fn random_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let items = (0..spec.total())
        .map(|i| {
            let mut rng = item_rng(spec, i);
            let p = spec.dims[rng.random_range(0..spec.dims.len())];
            Ok(DatasetItem { provenance: Provenance::Random, core: random_basis(spec.n, p, &mut rng)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let dims: Vec<usize> = items.iter().map(|it| it.core.p()).collect();
    let mut spec = spec.clone();
    // Items are already at their final dimension.
    spec.dims.clear();
    finish(&spec, None, 0, items, &dims, None)
}

pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    match spec.model {
        Model::NestedBall => nested_ball_dataset(spec),
        Model::Arc => arc_dataset(spec),
        Model::Random => random_dataset(spec),
    }
}
