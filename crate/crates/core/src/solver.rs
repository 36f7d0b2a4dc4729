//! Dual subgradient solver for the minimax (minimum enclosing ball) center.
//!
//! The primal problem is `min_U max_i d(U, X_i)` over k-planes `U`. Dualizing
//! the per-item constraints gives a convex function of simplex weights,
//!
//! ```text
//! f(λ) = −Σ λ_i min(k, p_i) + Σ_{r ≤ k} eig_r(Σ λ_i X_i X_iᵀ)
//! ```
//!
//! whose maximizing k-plane `U_λ` is the dominant eigenspace of the weighted
//! projector sum, and whose subgradient at λ is `g_i = −d(U_λ, X_i)`. Signs
//! follow the maximization form of the primal, so `f(λ) = λᵀg ≥ −max_i d_i`
//! for every feasible λ and the duality gap is `f(λ) + max_i d(U_λ, X_i)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{GmebError, Result};
use crate::grassmann::{
    check_simplex, dominant_eigenspace, p2s_unchecked, weighted_stack, Basis, Eigenspace,
    SubspaceCollection,
};

/// Tolerance on `Σλ = 1` for feasible weights.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// How the step length is chosen each iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepMode {
    /// Back-tracking line search on `a/√t`; `a` grows by β after any
    /// accepted step, so the scale tracks the local curvature.
    #[default]
    Adaptive,
    /// Back-tracking line search where `a` only re-grows after a step that
    /// needed back-tracking.
    Backtracking,
    /// Plain `a/√t` steps, no line search.
    Diminishing,
}

impl std::str::FromStr for StepMode {
    type Err = GmebError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Self::Adaptive),
            "backtracking" => Ok(Self::Backtracking),
            "diminishing" => Ok(Self::Diminishing),
            other => Err(GmebError::InvalidConfig(format!("unknown step mode `{other}`"))),
        }
    }
}

/// How a moved iterate is mapped back onto the simplex.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimplexMap {
    /// Euclidean projection. Weights off the support reach exactly zero.
    #[default]
    Project,
    /// Clamp at zero, then divide by the ℓ1 norm. Off-support weights only
    /// decay geometrically, so tight gaps take far longer to certify.
    Normalize,
}

impl std::str::FromStr for SimplexMap {
    type Err = GmebError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "project" => Ok(Self::Project),
            "normalize" => Ok(Self::Normalize),
            other => Err(GmebError::InvalidConfig(format!("unknown simplex map `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial step scale.
    pub a: f64,
    /// Stopping tolerance for both the gap test and the stall test.
    pub eta: f64,
    /// Back-tracking is abandoned once the trial step drops below `zeta · a/√t`.
    pub zeta: f64,
    /// Growth factor for the step scale.
    pub beta: f64,
    pub max_iter: usize,
    /// Number of past dual values the stall test looks back over.
    pub history_window: usize,
    pub step_mode: StepMode,
    pub simplex_map: SimplexMap,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            eta: 1e-12,
            zeta: 1e-6,
            beta: 1.5,
            max_iter: 5000,
            history_window: 10,
            step_mode: StepMode::Adaptive,
            simplex_map: SimplexMap::Project,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(GmebError::InvalidConfig(msg.to_string()));
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad("a must be positive");
        }
        if !(self.eta > 0.0) {
            return bad("eta must be positive");
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return bad("zeta must lie in (0, 1)");
        }
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return bad("beta must be at least 1");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if self.history_window == 0 {
            return bad("history_window must be at least 1");
        }
        Ok(())
    }
}

/// Feasible dual weights: nonnegative, summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DualWeights(Vec<f64>);

impl DualWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(GmebError::InvalidArgument("dual weights cannot be empty".into()));
        }
        check_simplex(&values, SIMPLEX_TOL)?;
        Ok(Self(values))
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for DualWeights {
    type Error = GmebError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<DualWeights> for Vec<f64> {
    fn from(w: DualWeights) -> Self {
        w.0
    }
}

/// Clamps negative entries to zero, then divides by the ℓ1 norm.
pub fn simplex_normalize(v: &[f64]) -> Result<DualWeights> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(GmebError::InvalidArgument("vector has non-finite entries".into()));
    }
    let clamped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    let norm: f64 = clamped.iter().sum();
    if norm <= 0.0 {
        return Err(GmebError::ZeroVector);
    }
    Ok(DualWeights(clamped.into_iter().map(|x| x / norm).collect()))
}

/// Euclidean projection onto the unit simplex (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Result<DualWeights> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(GmebError::InvalidArgument("cannot project an empty or non-finite vector".into()));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    // Renormalize away the roundoff of the threshold sum.
    let norm: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= norm);
    Ok(DualWeights(out))
}

/// Dual function value together with its maximizing center.
#[derive(Clone, Debug)]
pub struct DualEvaluation {
    pub value: f64,
    pub space: Eigenspace,
    /// `d(U_λ, X_i)` for every item; the subgradient is the negation.
    pub distances: Vec<f64>,
}

impl DualEvaluation {
    pub fn center(&self) -> &Basis {
        &self.space.basis
    }

    pub fn subgradient(&self) -> Vec<f64> {
        self.distances.iter().map(|d| -d).collect()
    }

    /// Largest point-to-set distance from the center, the primal cost.
    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_k(collection: &SubspaceCollection, k: usize) -> Result<()> {
    if k == 0 || k > collection.n() {
        return Err(GmebError::InvalidArgument(format!(
            "center dimension k = {k} outside 1..={}",
            collection.n()
        )));
    }
    Ok(())
}

fn distances_from(center: &Basis, collection: &SubspaceCollection) -> Vec<f64> {
    collection.iter().map(|x| p2s_unchecked(center.matrix(), x.matrix())).collect()
}

fn evaluate(lambda: &[f64], collection: &SubspaceCollection, k: usize) -> DualEvaluation {
    let space = dominant_eigenspace(&weighted_stack(collection, lambda), k);
    let distances = distances_from(&space.basis, collection);
    let value = -lambda.iter().zip(&distances).map(|(l, d)| l * d).sum::<f64>();
    DualEvaluation { value, space, distances }
}

/// Dual cost `f(λ)` and the dominant k-eigenspace `U_λ` attaining it.
pub fn dual_cost(lambda: &DualWeights, collection: &SubspaceCollection, k: usize) -> Result<DualEvaluation> {
    check_k(collection, k)?;
    if lambda.len() != collection.len() {
        return Err(GmebError::InvalidArgument(format!(
            "{} weights for {} subspaces",
            lambda.len(),
            collection.len()
        )));
    }
    let eval = evaluate(lambda.as_slice(), collection, k);
    if eval.space.degenerate_gap {
        log::warn!("dual center for k = {k} sits on an eigenvalue tie");
    }
    Ok(eval)
}

/// Subgradient `g_i = −d(U, X_i)` of the dual at the weights that produced `U`.
pub fn subgradient(center: &Basis, collection: &SubspaceCollection) -> Result<Vec<f64>> {
    if center.n() != collection.n() {
        return Err(GmebError::DimensionMismatch { expected: collection.n(), found: center.n() });
    }
    Ok(distances_from(center, collection).into_iter().map(|d| -d).collect())
}

/// `max_i d(U, X_i)`.
pub fn primal_cost(center: &Basis, collection: &SubspaceCollection) -> Result<f64> {
    if center.n() != collection.n() {
        return Err(GmebError::DimensionMismatch { expected: collection.n(), found: center.n() });
    }
    Ok(distances_from(center, collection).into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvergedReason {
    GapBelowEta,
    Stalled,
    MaxIter,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: usize,
    /// `max_i d(U^(t), X_i)`.
    pub primal: f64,
    /// `f(λ^(t))`.
    pub dual: f64,
    /// Step length used to reach this iterate (0 for the start point).
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub k: usize,
    pub lambda_best: DualWeights,
    /// Iterate with the lowest primal cost seen.
    pub center: Basis,
    /// `max_i d(center, X_i)`.
    pub primal_cost: f64,
    /// `f(lambda_best)`, in the maximization sign convention (≤ 0).
    pub dual_cost: f64,
    /// `dual_cost + primal_cost`; nonnegative up to roundoff.
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged_reason: ConvergedReason,
    pub trace: Vec<TraceEntry>,
}

/// State handed to a [`solve_observed`] callback after every iterate.
pub struct IterationView<'a> {
    pub t: usize,
    pub lambda: &'a [f64],
    pub center: &'a Basis,
    pub primal: f64,
    pub dual: f64,
    pub step: f64,
}

/// Runs the dual subgradient method on Gr(k, n).
///
/// `init` defaults to uniform weights; pass the previous rank's optimum to
/// warm-start.
pub fn solve(
    collection: &SubspaceCollection,
    k: usize,
    config: &SolverConfig,
    init: Option<&DualWeights>,
) -> Result<SolverResult> {
    solve_observed(collection, k, config, init, |_| {})
}

pub fn solve_observed<F>(
    collection: &SubspaceCollection,
    k: usize,
    config: &SolverConfig,
    init: Option<&DualWeights>,
    mut observe: F,
) -> Result<SolverResult>
where
    F: FnMut(&IterationView<'_>),
{
    config.validate()?;
    check_k(collection, k)?;
    let m = collection.len();
    let mut lambda = match init {
        Some(w) if w.len() != m => {
            return Err(GmebError::InvalidArgument(format!("initial weights have length {}, expected {m}", w.len())))
        }
        Some(w) => w.as_slice().to_vec(),
        None => DualWeights::uniform(m).into_vec(),
    };

    let mut scale = config.a;
    let mut current = evaluate(&lambda, collection, k);
    check_finite(&current, 0)?;
    let mut trace = vec![TraceEntry { t: 0, primal: current.max_distance(), dual: current.value, step: 0.0 }];
    observe(&IterationView {
        t: 0,
        lambda: &lambda,
        center: current.center(),
        primal: current.max_distance(),
        dual: current.value,
        step: 0.0,
    });

    let mut best_lambda = lambda.clone();
    let mut best = current.clone();
    // The center is the lowest-primal iterate seen, which need not be U_{λ_best}.
    let mut best_center = (current.max_distance(), current.space.clone());
    let mut history: VecDeque<f64> = VecDeque::with_capacity(config.history_window + 1);
    history.push_back(current.value);
    let mut t = 0;

    let reason = loop {
        if best.value + best_center.0 <= config.eta {
            break ConvergedReason::GapBelowEta;
        }
        if history.len() > config.history_window {
            let progress = history
                .iter()
                .skip(1)
                .map(|f| f - current.value)
                .fold(f64::NEG_INFINITY, f64::max);
            if progress <= config.eta {
                break ConvergedReason::Stalled;
            }
        }
        if t >= config.max_iter {
            break ConvergedReason::MaxIter;
        }

        t += 1;
        let sqrt_t = (t as f64).sqrt();
        let nominal = scale / sqrt_t;
        let previous = current.value;
        let gradient = current.subgradient();
        let take_step = |step: f64| -> Result<(Vec<f64>, DualEvaluation)> {
            let moved: Vec<f64> = lambda.iter().zip(&gradient).map(|(l, g)| l - step * g).collect();
            let next = match config.simplex_map {
                SimplexMap::Project => project_simplex(&moved)?,
                SimplexMap::Normalize => simplex_normalize(&moved)?,
            }
            .into_vec();
            let eval = evaluate(&next, collection, k);
            Ok((next, eval))
        };

        let (mut next_lambda, mut next) = take_step(nominal)?;
        check_finite(&next, t)?;
        let mut step = nominal;
        match config.step_mode {
            StepMode::Diminishing => {}
            StepMode::Adaptive | StepMode::Backtracking => {
                if next.value > previous {
                    let mut trial = nominal;
                    while next.value > previous && trial > config.zeta * nominal {
                        scale /= 2.0;
                        trial = scale / sqrt_t;
                        let (cand_lambda, cand) = take_step(trial)?;
                        check_finite(&cand, t)?;
                        if cand.value <= previous {
                            scale *= config.beta;
                            next_lambda = cand_lambda;
                            next = cand;
                            step = trial;
                        }
                    }
                } else if config.step_mode == StepMode::Adaptive {
                    scale *= config.beta;
                }
            }
        }

        lambda = next_lambda;
        current = next;
        trace.push(TraceEntry { t, primal: current.max_distance(), dual: current.value, step });
        observe(&IterationView {
            t,
            lambda: &lambda,
            center: current.center(),
            primal: current.max_distance(),
            dual: current.value,
            step,
        });
        if current.value <= best.value {
            best = current.clone();
            best_lambda.clone_from(&lambda);
        }
        if current.max_distance() < best_center.0 {
            best_center = (current.max_distance(), current.space.clone());
        }
        if history.len() > config.history_window {
            history.pop_back();
        }
        history.push_front(current.value);
    };

    let (primal, space) = best_center;
    if space.degenerate_gap {
        log::warn!("returned center for k = {k} sits on an eigenvalue tie");
    }
    Ok(SolverResult {
        k,
        lambda_best: DualWeights(best_lambda),
        center: space.basis,
        primal_cost: primal,
        dual_cost: best.value,
        duality_gap: best.value + primal,
        iterations: t,
        converged_reason: reason,
        trace,
    })
}

fn check_finite(eval: &DualEvaluation, iteration: usize) -> Result<()> {
    if eval.value.is_finite() && eval.distances.iter().all(|d| d.is_finite()) {
        Ok(())
    } else {
        Err(GmebError::NonFiniteCost { iteration })
    }
}

/// One rank of a warm-started sweep.
#[derive(Debug)]
pub struct SweepEntry {
    pub k: usize,
    /// Weights the run started from.
    pub init: DualWeights,
    pub result: Result<SolverResult>,
}

/// Solves k = 1..=k_max, starting each rank from the previous rank's
/// best weights. Rank 1 (and any rank after a failure) starts uniform.
pub fn warm_start_sweep(collection: &SubspaceCollection, k_max: usize, config: &SolverConfig) -> Result<Vec<SweepEntry>> {
    config.validate()?;
    if k_max == 0 || k_max > collection.max_dim() {
        return Err(GmebError::InvalidArgument(format!(
            "k_max = {k_max} outside 1..={}",
            collection.max_dim()
        )));
    }
    let mut entries = Vec::with_capacity(k_max);
    let mut previous: Option<DualWeights> = None;
    for k in 1..=k_max {
        let init = previous.take().unwrap_or_else(|| DualWeights::uniform(collection.len()));
        let result = solve(collection, k, config, Some(&init));
        if let Ok(r) = &result {
            previous = Some(r.lambda_best.clone());
        }
        entries.push(SweepEntry { k, init, result });
    }
    Ok(entries)
}

/// Independent uniform-start solves for k = 1..=k_max.
pub fn cold_sweep(collection: &SubspaceCollection, k_max: usize, config: &SolverConfig) -> Result<Vec<SweepEntry>> {
    config.validate()?;
    if k_max == 0 || k_max > collection.max_dim() {
        return Err(GmebError::InvalidArgument(format!(
            "k_max = {k_max} outside 1..={}",
            collection.max_dim()
        )));
    }
    let init = DualWeights::uniform(collection.len());
    Ok((1..=k_max)
        .map(|k| SweepEntry { k, init: init.clone(), result: solve(collection, k, config, Some(&init)) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normalize_examples() {
        assert_eq!(simplex_normalize(&[1.0, 1.0, 2.0]).unwrap().as_slice(), &[0.25, 0.25, 0.5]);
        let w = simplex_normalize(&[0.2, -0.1, 0.3]).unwrap();
        assert_abs_diff_eq!(w.as_slice()[0], 0.4, epsilon = 1e-15);
        assert_eq!(w.as_slice()[1], 0.0);
        assert_abs_diff_eq!(w.as_slice()[2], 0.6, epsilon = 1e-15);
        assert!(matches!(simplex_normalize(&[0.0, -1.0]), Err(GmebError::ZeroVector)));
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.2, 0.3, 0.5]).unwrap().as_slice(), &[0.2, 0.3, 0.5]);
        let w = project_simplex(&[1.0, 0.0, 0.0, 5.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 0.0, 0.0, 1.0]);
        let w = project_simplex(&[0.5, 0.5, -3.0]).unwrap();
        assert_abs_diff_eq!(w.as_slice()[0], 0.5, epsilon = 1e-15);
        assert_eq!(w.as_slice()[2], 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig { a: 0.0, ..Default::default() },
            SolverConfig { eta: 0.0, ..Default::default() },
            SolverConfig { zeta: 1.0, ..Default::default() },
            SolverConfig { beta: 0.5, ..Default::default() },
            SolverConfig { max_iter: 0, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(GmebError::InvalidConfig(_))));
        }
    }

    #[test]
    fn dual_weights_reject_infeasible() {
        assert!(DualWeights::new(vec![0.5, 0.6]).is_err());
        assert!(DualWeights::new(vec![1.5, -0.5]).is_err());
        assert!(DualWeights::new(vec![]).is_err());
        let parsed: std::result::Result<DualWeights, _> = serde_json::from_str("[0.25, 0.75]");
        assert!(parsed.is_ok());
        let parsed: std::result::Result<DualWeights, _> = serde_json::from_str("[0.25, 0.25]");
        assert!(parsed.is_err());
    }

    #[test]
    fn single_subspace_solves_immediately() {
        let x = Basis::coordinate(5, &[0, 2, 4]).unwrap();
        let c = SubspaceCollection::new(vec![x.clone()]).unwrap();
        for k in 1..=3 {
            let r = solve(&c, k, &SolverConfig::default(), None).unwrap();
            assert!(r.iterations <= 2);
            assert_abs_diff_eq!(r.primal_cost, 0.0, epsilon = 1e-12);
            assert_eq!(r.converged_reason, ConvergedReason::GapBelowEta);
        }
        let r = dual_cost(&DualWeights::uniform(1), &c, 3).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(crate::grassmann::p2s_distance(r.center(), &x).unwrap(), 0.0, epsilon = 1e-12);
        assert_eq!(subgradient(&x, &c).unwrap(), vec![0.0]);
        assert_eq!(primal_cost(&x, &c).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_rank_and_init() {
        let c = SubspaceCollection::new(vec![Basis::coordinate(3, &[0]).unwrap()]).unwrap();
        assert!(solve(&c, 0, &SolverConfig::default(), None).is_err());
        assert!(solve(&c, 4, &SolverConfig::default(), None).is_err());
        let w = DualWeights::uniform(2);
        assert!(solve(&c, 1, &SolverConfig::default(), Some(&w)).is_err());
        assert!(warm_start_sweep(&c, 2, &SolverConfig::default()).is_err());
    }

    #[test]
    fn step_mode_parses() {
        assert_eq!("diminishing".parse::<StepMode>().unwrap(), StepMode::Diminishing);
        assert!("fast".parse::<StepMode>().is_err());
        assert_eq!("normalize".parse::<SimplexMap>().unwrap(), SimplexMap::Normalize);
    }

    #[test]
    fn normalize_map_still_solves_worked_example() {
        let config = SolverConfig { simplex_map: SimplexMap::Normalize, ..Default::default() };
        let r = solve(&crate::fixtures::three_subspaces(), 1, &config, None).unwrap();
        assert!((r.primal_cost - 1.0 / 9.0).abs() < 1e-9);
    }
}
