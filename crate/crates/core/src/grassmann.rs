//! Subspace representations and the point-to-set geometry used by the solver.
//!
//! A point on Gr(p, n) is stored as an n×p matrix with orthonormal columns.
//! Distances are squared chordal, `Σ sin²θ_r`, and subspaces of different
//! dimension are compared through the point-to-set convention: the distance
//! from a k-plane `U` to a p-plane `X` is the distance from `U` to the nearest
//! k-plane that contains `X` (p < k) or is contained in `X` (p ≥ k). That
//! value only needs the first `min(k, p)` principal angles:
//! `min(k, p) − ‖UᵀX‖²_F`.

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{GmebError, Result};

/// Maximum entry of `|BᵀB − I|` accepted for a [`Basis`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Singular values of `AᵀB` above 1 by at most this much are clamped to 1.
pub const ANGLE_CLAMP_TOL: f64 = 1e-10;

/// Rank threshold used when re-orthonormalizing a padded closest point.
pub const COMPLETION_RANK_TOL: f64 = 1e-10;

/// Eigenvalues closer than this are reported as a degenerate eigengap.
pub const EIGENGAP_TOL: f64 = 1e-12;

/// Smallest `μ_k / μ_1` for which the Gram-side eigenvectors are mapped back.
const GRAM_RATIO_TOL: f64 = 1e-6;

/// Orthonormal basis of a point on Gr(p, n).
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    columns: DMatrix<f64>,
}

impl Basis {
    /// Wraps a matrix whose columns are already orthonormal.
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        let (n, p) = columns.shape();
        if p == 0 || p > n {
            return Err(GmebError::InvalidArgument(format!(
                "basis must satisfy 1 <= p <= n, got {n}x{p}"
            )));
        }
        let deviation = orthonormality_error(&columns);
        if !(deviation <= ORTHONORMAL_TOL) {
            return Err(GmebError::NotOrthonormal { deviation });
        }
        Ok(Self { columns })
    }

    pub(crate) fn from_orthonormal(columns: DMatrix<f64>) -> Self {
        debug_assert!(orthonormality_error(&columns) <= 1e-8);
        Self { columns }
    }

    /// Span of the listed coordinate axes of R^n (0-based).
    pub fn coordinate(n: usize, axes: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, axes.len());
        for (j, &axis) in axes.iter().enumerate() {
            if axis >= n {
                return Err(GmebError::InvalidArgument(format!("axis {axis} out of range for n = {n}")));
            }
            m[(axis, j)] = 1.0;
        }
        Self::new(m)
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.columns.nrows()
    }

    /// Subspace dimension.
    pub fn p(&self) -> usize {
        self.columns.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.columns
    }

    /// The orthogonal projector `BBᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.columns * self.columns.transpose()
    }

    /// Same subspace, different representative: `B Q` for orthogonal `Q`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Result<Self> {
        Self::new(&self.columns * q)
    }
}

/// Max-entry deviation of `MᵀM` from the identity.
pub fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let mut worst = 0.0_f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = (gram[(i, j)] - target).abs();
            if !(dev <= worst) {
                worst = dev;
            }
        }
    }
    worst
}

/// A finite collection of subspaces sharing one ambient dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceCollection {
    n: usize,
    items: Vec<Basis>,
}

impl SubspaceCollection {
    pub fn new(items: Vec<Basis>) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| GmebError::InvalidArgument("collection must hold at least one subspace".into()))?;
        let n = first.n();
        if let Some(bad) = items.iter().find(|b| b.n() != n) {
            return Err(GmebError::DimensionMismatch { expected: n, found: bad.n() });
        }
        Ok(Self { n, items })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Basis] {
        &self.items
    }

    pub fn into_items(self) -> Vec<Basis> {
        self.items
    }

    pub fn dims(&self) -> Vec<usize> {
        self.items.iter().map(Basis::p).collect()
    }

    /// Largest item dimension, the top of the order-selection range.
    pub fn max_dim(&self) -> usize {
        self.items.iter().map(Basis::p).max().unwrap_or(0)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Basis> {
        self.items.iter()
    }
}

/// Principal angles in radians, nondecreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleVector(Vec<f64>);

impl AngleVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ sin²θ_r`, the squared chordal distance over these angles.
    pub fn squared_chordal(&self) -> f64 {
        self.0.iter().map(|t| t.sin().powi(2)).sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn check_same_ambient(a: &Basis, b: &Basis) -> Result<()> {
    if a.n() != b.n() {
        return Err(GmebError::DimensionMismatch { expected: a.n(), found: b.n() });
    }
    Ok(())
}

/// Orthonormal basis for the column space of `matrix`.
///
/// Fails with `RankDeficient` when `σ_min / σ_max <= tol`.
pub fn orthonormalize(matrix: &DMatrix<f64>, tol: f64) -> Result<Basis> {
    let (n, p) = matrix.shape();
    if p == 0 || p > n {
        return Err(GmebError::InvalidArgument(format!(
            "cannot orthonormalize a {n}x{p} matrix"
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(GmebError::InvalidArgument("matrix has non-finite entries".into()));
    }
    let sv = matrix.clone().singular_values();
    let top = sv.max();
    let rank = if top > 0.0 { sv.iter().filter(|&&s| s > tol * top).count() } else { 0 };
    if rank < p {
        return Err(GmebError::RankDeficient { rank, expected: p });
    }
    let q = matrix.clone().qr().q();
    Ok(Basis::from_orthonormal(q))
}

/// Singular values of `AᵀB`, largest first, after clamping roundoff above 1.
fn cosines(a: &Basis, b: &Basis) -> Result<Vec<f64>> {
    check_same_ambient(a, b)?;
    let cross = a.matrix().transpose() * b.matrix();
    let sv = SVD::new(cross, false, false).singular_values;
    let r = a.p().min(b.p());
    let mut out = Vec::with_capacity(r);
    for &s in sv.iter().take(r) {
        if s > 1.0 + ANGLE_CLAMP_TOL {
            return Err(GmebError::AngleOvershoot { sigma: s });
        }
        out.push(s.min(1.0));
    }
    Ok(out)
}

/// The `min(A.p, B.p)` principal angles between two subspaces, ascending.
///
/// Angles below π/4 come from sines, since `acos` near 1 loses half the digits.
pub fn principal_angles(a: &Basis, b: &Basis) -> Result<AngleVector> {
    let cos = cosines(a, b)?;
    let (small, large) = if a.p() <= b.p() { (a, b) } else { (b, a) };
    let residual = small.matrix() - large.matrix() * (large.matrix().transpose() * small.matrix());
    let sin = residual.singular_values();
    let mut sin: Vec<f64> = sin.iter().map(|s| s.min(1.0)).collect();
    sin.sort_by(f64::total_cmp);
    Ok(AngleVector(
        cos.iter()
            .zip(&sin)
            .map(|(&c, &s)| if c * c < 0.5 { c.acos() } else { s.asin() })
            .collect(),
    ))
}

/// Point-to-set squared chordal distance `min(k, p) − ‖UᵀX‖²_F`.
pub fn p2s_distance(u: &Basis, x: &Basis) -> Result<f64> {
    check_same_ambient(u, x)?;
    Ok(p2s_unchecked(u.matrix(), x.matrix()))
}

pub(crate) fn p2s_unchecked(u: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let r = u.ncols().min(x.ncols()) as f64;
    let overlap = (u.transpose() * x).norm_squared();
    (r - overlap).clamp(0.0, r)
}

/// A point of Gr(k, n) in the set associated with `X` nearest to `U`.
///
/// For `p >= k` the result lies inside `X`; otherwise it contains `X` and is
/// padded with the principal directions of `U` that are orthogonal to `X`.
pub fn closest_point(u: &Basis, x: &Basis) -> Result<Basis> {
    check_same_ambient(u, x)?;
    let (k, p) = (u.p(), x.p());
    let cross = u.matrix().transpose() * x.matrix();
    let svd = SVD::new(cross, true, true);
    let left = svd.u.expect("left singular vectors requested");
    let right = svd.v_t.expect("right singular vectors requested").transpose();

    let y = if p >= k {
        x.matrix() * right.columns(0, k)
    } else {
        let mut y = DMatrix::zeros(u.n(), k);
        y.columns_mut(0, p).copy_from(&(x.matrix() * &right));
        let rest = complement_columns(&left);
        y.columns_mut(p, k - p).copy_from(&(u.matrix() * rest));
        y
    };
    orthonormalize(&y, COMPLETION_RANK_TOL).map_err(|err| match err {
        GmebError::RankDeficient { .. } => GmebError::DegenerateCompletion,
        other => other,
    })
}

/// Orthonormal columns spanning the complement of `col(q)` in R^rows.
fn complement_columns(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, r) = q.shape();
    let residual = DMatrix::identity(rows, rows) - q * q.transpose();
    let (_, vectors) = symmetric_eigen_desc(residual);
    vectors.columns(0, rows - r).into_owned()
}

/// Basis of `col(I − UUᵀ)`.
pub fn orthogonal_complement(u: &Basis) -> Result<Basis> {
    if u.p() == u.n() {
        return Err(GmebError::FullSpace { n: u.n() });
    }
    Ok(Basis::from_orthonormal(complement_columns(u.matrix())))
}

/// `½‖AAᵀ − BBᵀ‖²_F` between projectors.
///
/// Equals `|A.p − B.p| / 2 + p2s_distance(A, B)`.
pub fn projection_fnorm_distance(a: &Basis, b: &Basis) -> Result<f64> {
    check_same_ambient(a, b)?;
    let overlap = (a.matrix().transpose() * b.matrix()).norm_squared();
    Ok(((a.p() + b.p()) as f64 / 2.0 - overlap).max(0.0))
}

/// Eigenvalues (descending) and matching eigenvectors of a symmetric matrix.
pub fn symmetric_eigen_desc(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = faer::MatRef::from_column_major_slice(m.as_slice(), n, n)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigendecomposition converges");
    // faer returns ascending eigenvalues.
    let (s, u) = (eig.S().column_vector(), eig.U());
    let values = (0..n).map(|i| s[n - 1 - i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| u[(r, n - 1 - c)]);
    (values, vectors)
}

/// `Σ w_i X_i X_iᵀ`, formed as `AAᵀ` with `A` from [`weighted_stack`].
pub fn weighted_projector_sum(collection: &SubspaceCollection, weights: &[f64]) -> DMatrix<f64> {
    let stacked = weighted_stack(collection, weights);
    &stacked * stacked.transpose()
}

/// `A = [√w_1 X_1, …]` over the items with positive weight.
pub fn weighted_stack(collection: &SubspaceCollection, weights: &[f64]) -> DMatrix<f64> {
    let total: usize = collection
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(b, _)| b.p())
        .sum();
    let mut stacked = DMatrix::zeros(collection.n(), total);
    let mut col = 0;
    for (basis, &w) in collection.iter().zip(weights) {
        if w <= 0.0 {
            continue;
        }
        let p = basis.p();
        stacked.columns_mut(col, p).copy_from(&(basis.matrix() * w.sqrt()));
        col += p;
    }
    stacked
}

/// Checks nonnegativity and unit sum within `tol`.
pub fn check_simplex(weights: &[f64], tol: f64) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(GmebError::InvalidArgument("weights must be finite and nonnegative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(GmebError::InvalidArgument(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Dominant eigenspace of a weighted projector average.
#[derive(Clone, Debug)]
pub struct Eigenspace {
    pub basis: Basis,
    /// All n eigenvalues, largest first.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues k and k+1 coincide, so the eigenspace is not unique.
    pub degenerate_gap: bool,
}

/// Dominant k-eigenspace of `AAᵀ` for a weighted stack `A`.
///
/// When `A` has fewer columns than rows the eigenproblem is solved on the
/// smaller `AᵀA` and mapped back through `A`, unless the k-th eigenvalue is
/// too small for that map to be accurate.
pub(crate) fn dominant_eigenspace(stack: &DMatrix<f64>, k: usize) -> Eigenspace {
    let (n, cols) = stack.shape();
    if k <= cols && cols < n {
        let (mut eigenvalues, v) = symmetric_eigen_desc(stack.transpose() * stack);
        if eigenvalues[k - 1] > GRAM_RATIO_TOL * eigenvalues[0] {
            eigenvalues.resize(n, 0.0);
            let mapped = stack * v.columns(0, k);
            let q = mapped.qr().q();
            return Eigenspace::new(Basis::from_orthonormal(q), eigenvalues, k);
        }
    }
    let (eigenvalues, vectors) = symmetric_eigen_desc(stack * stack.transpose());
    Eigenspace::new(Basis::from_orthonormal(vectors.columns(0, k).into_owned()), eigenvalues, k)
}

impl Eigenspace {
    fn new(basis: Basis, eigenvalues: Vec<f64>, k: usize) -> Self {
        let degenerate_gap = k < eigenvalues.len() && (eigenvalues[k - 1] - eigenvalues[k]).abs() <= EIGENGAP_TOL;
        Self { basis, eigenvalues, degenerate_gap }
    }
}

/// Dominant k-dimensional eigenspace of `Σ w_i X_i X_iᵀ`.
pub fn extrinsic_mean(collection: &SubspaceCollection, k: usize, weights: &[f64]) -> Result<Eigenspace> {
    if weights.len() != collection.len() {
        return Err(GmebError::InvalidArgument(format!(
            "{} weights for {} subspaces",
            weights.len(),
            collection.len()
        )));
    }
    if k == 0 || k > collection.n() {
        return Err(GmebError::InvalidArgument(format!("k = {k} outside 1..={}", collection.n())));
    }
    check_simplex(weights, 1e-12)?;
    let space = dominant_eigenspace(&weighted_stack(collection, weights), k);
    if space.degenerate_gap {
        log::warn!("eigenvalues {k} and {} coincide; extrinsic mean is not unique", k + 1);
    }
    Ok(space)
}
