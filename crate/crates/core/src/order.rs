//! Choosing the dimension of the central subspace.
//!
//! Four rules share one report. The proposed rule adds the normalized
//! minimax radius `c_obj(k)` to a penalty `c_pen(k)` measuring how much of the
//! least-represented item falls outside the center. The uniform MSE rule
//! thresholds eigenvalues of the average projector, the hybrid rule reuses
//! the MSE form with the solver's dual weights, and the scree elbow fits two
//! lines to the singular values of the stacked bases.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GmebError, Result};
use crate::grassmann::{p2s_unchecked, symmetric_eigen_desc, weighted_projector_sum, Basis, SubspaceCollection};
use crate::solver::{self, ConvergedReason, DualWeights, SolverConfig, SolverResult};

/// Eigenvalues above this count toward the MSE order.
pub const MSE_THRESHOLD: f64 = 0.5;

/// Totals closer than this are treated as ties and go to the smaller k.
pub const TIE_TOL: f64 = 1e-12;

/// `max_i d(U, X_i) / k`.
pub fn c_obj(center: &Basis, collection: &SubspaceCollection) -> Result<f64> {
    check_ambient(center, collection)?;
    let k = center.p() as f64;
    let worst = collection
        .iter()
        .map(|x| p2s_unchecked(center.matrix(), x.matrix()))
        .fold(0.0, f64::max);
    Ok((worst / k).clamp(0.0, 1.0))
}

/// Smallest fraction of any item's leading `min(n − k, p_j)` directions that
/// the complement of `center` captures.
pub fn c_pen(center: &Basis, collection: &SubspaceCollection) -> Result<f64> {
    check_ambient(center, collection)?;
    let (n, k) = (center.n(), center.p());
    if k == n {
        return Err(GmebError::FullSpace { n });
    }
    let pen = collection
        .iter()
        .map(|x| {
            let p = x.p();
            let p_tilde = p.min(n - k) as f64;
            // ‖U⊥ᵀX‖² = p − ‖UᵀX‖², and U⊥ᵀX has exactly p̃ singular values.
            let inside = (&center.matrix().transpose() * x.matrix()).norm_squared();
            ((p as f64 - inside).max(0.0) / p_tilde).min(1.0)
        })
        .fold(1.0, f64::min);
    Ok(pen)
}

fn check_ambient(center: &Basis, collection: &SubspaceCollection) -> Result<()> {
    if center.n() != collection.n() {
        return Err(GmebError::DimensionMismatch { expected: collection.n(), found: center.n() });
    }
    Ok(())
}

/// `Σ_{r≤k}(1 − d_r) + Σ_{r>k} d_r` over all `n` eigenvalues.
pub fn mse_from_eigenvalues(eigenvalues: &[f64], k: usize) -> f64 {
    eigenvalues
        .iter()
        .enumerate()
        .map(|(r, d)| if r < k { 1.0 - d } else { *d })
        .sum()
}

/// Descending eigenvalues of `Σ w_i X_i X_iᵀ`.
pub fn projector_eigenvalues(collection: &SubspaceCollection, weights: &[f64]) -> Vec<f64> {
    symmetric_eigen_desc(weighted_projector_sum(collection, weights)).0
}

fn uniform(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

/// Mean squared projection distance to the best k-plane, from eigenvalues.
pub fn mse_value(collection: &SubspaceCollection, k: usize) -> Result<f64> {
    if k > collection.n() {
        return Err(GmebError::InvalidArgument(format!("k = {k} exceeds n = {}", collection.n())));
    }
    Ok(mse_from_eigenvalues(&projector_eigenvalues(collection, &uniform(collection.len())), k))
}

/// Number of average-projector eigenvalues strictly above one half (an
/// eigenvalue within roundoff of one half does not count).
pub fn select_order_mse(collection: &SubspaceCollection) -> usize {
    projector_eigenvalues(collection, &uniform(collection.len()))
        .iter()
        .filter(|&&d| d > MSE_THRESHOLD + TIE_TOL)
        .count()
}

/// Index of the smallest value; near-ties go to the earlier index.
pub fn argmin_parsimonious(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if v >= values[b] - TIE_TOL => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Hybrid rule: MSE with the dual weights of each rank (uniform at k = 0).
/// `sweep[j]` must be the result for k = j + 1.
pub fn select_order_hybrid(sweep: &[SolverResult], collection: &SubspaceCollection) -> Result<usize> {
    let values = hybrid_values(sweep, collection)?;
    Ok(argmin_parsimonious(&values).unwrap_or(0))
}

fn hybrid_values(sweep: &[SolverResult], collection: &SubspaceCollection) -> Result<Vec<f64>> {
    let mut values = vec![mse_from_eigenvalues(&projector_eigenvalues(collection, &uniform(collection.len())), 0)];
    for (j, r) in sweep.iter().enumerate() {
        if r.k != j + 1 {
            return Err(GmebError::InvalidArgument(format!("sweep entry {j} has k = {}, expected {}", r.k, j + 1)));
        }
        if r.lambda_best.len() != collection.len() {
            return Err(GmebError::InvalidArgument("sweep weights do not match the collection".into()));
        }
        let eig = projector_eigenvalues(collection, r.lambda_best.as_slice());
        values.push(mse_from_eigenvalues(&eig, r.k));
    }
    Ok(values)
}

/// Least-squares line residual sum of squares over `(x, y)` points.
fn line_sse(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (syy - slope * sxy).max(0.0)
}

/// L-method knee of a descending scree: the split `c` (left line over the
/// first `c` values) minimizing the length-weighted RMSE of two line fits.
pub fn l_method(values: &[f64]) -> Result<usize> {
    let r = values.len();
    if r < 4 {
        return Err(GmebError::TooFewValues { count: r });
    }
    let points: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect();
    let mut best = (f64::INFINITY, 2);
    for c in 2..=r - 2 {
        let (left, right) = points.split_at(c);
        let rmse_l = (line_sse(left) / c as f64).sqrt();
        let rmse_r = (line_sse(right) / (r - c) as f64).sqrt();
        let score = (c as f64 * rmse_l + (r - c) as f64 * rmse_r) / r as f64;
        if score < best.0 - TIE_TOL {
            best = (score, c);
        }
    }
    Ok(best.1)
}

/// Singular values of the stacked bases `[X_1 … X_M]`, descending.
pub fn stacked_singular_values(collection: &SubspaceCollection) -> Vec<f64> {
    let total: usize = collection.dims().iter().sum();
    let mut stacked = DMatrix::zeros(collection.n(), total);
    let mut col = 0;
    for x in collection.iter() {
        stacked.columns_mut(col, x.p()).copy_from(x.matrix());
        col += x.p();
    }
    let mut s: Vec<f64> = stacked.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn select_order_svd_elbow(collection: &SubspaceCollection) -> Result<usize> {
    l_method(&stacked_singular_values(collection))
}

/// Solver outcome kept in a report row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub primal_cost: f64,
    pub dual_cost: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged_reason: ConvergedReason,
}

impl From<&SolverResult> for SolveSummary {
    fn from(r: &SolverResult) -> Self {
        Self {
            primal_cost: r.primal_cost,
            dual_cost: r.dual_cost,
            duality_gap: r.duality_gap,
            iterations: r.iterations,
            converged_reason: r.converged_reason,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub k: usize,
    pub c_obj: f64,
    pub c_pen: f64,
    pub total: f64,
    pub e_mse: f64,
    pub e_hybrid: f64,
    pub lambda_used: Vec<f64>,
    /// `None` for k = 0.
    pub solve: Option<SolveSummary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selections {
    pub proposed: usize,
    pub hybrid: usize,
    pub mse: usize,
    /// `None` when the scree has fewer than four values.
    pub svd_elbow: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub rows: Vec<OrderRow>,
    pub selections: Selections,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderOptions {
    /// Start each rank from the previous rank's weights. Without it the
    /// ranks are solved independently and in parallel.
    pub warm_start: bool,
}

impl Default for OrderOptions {
    fn default() -> Self {
        Self { warm_start: true }
    }
}

/// Solves every rank `1..=max p_i` and evaluates all four rules.
pub fn order_report(collection: &SubspaceCollection, config: &SolverConfig, options: OrderOptions) -> Result<OrderReport> {
    let sweep = solve_all_ranks(collection, config, options)?;
    assemble_report(collection, &sweep)
}

pub fn solve_all_ranks(
    collection: &SubspaceCollection,
    config: &SolverConfig,
    options: OrderOptions,
) -> Result<Vec<SolverResult>> {
    let k_max = collection.max_dim();
    if options.warm_start {
        solver::warm_start_sweep(collection, k_max, config)?.into_iter().map(|e| e.result).collect()
    } else {
        config.validate()?;
        let init = DualWeights::uniform(collection.len());
        (1..=k_max)
            .into_par_iter()
            .map(|k| solver::solve(collection, k, config, Some(&init)))
            .collect()
    }
}

/// Builds the report from a finished sweep (`sweep[j]` is rank `j + 1`).
pub fn assemble_report(collection: &SubspaceCollection, sweep: &[SolverResult]) -> Result<OrderReport> {
    let n = collection.n();
    let mse_eigs = projector_eigenvalues(collection, &uniform(collection.len()));
    let hybrid = hybrid_values(sweep, collection)?;
    let mut rows = vec![OrderRow {
        k: 0,
        c_obj: 0.0,
        c_pen: 1.0,
        total: 1.0,
        e_mse: mse_from_eigenvalues(&mse_eigs, 0),
        e_hybrid: hybrid[0],
        lambda_used: uniform(collection.len()),
        solve: None,
    }];
    for r in sweep {
        let obj = c_obj(&r.center, collection)?;
        // A center filling the whole space leaves nothing outside it.
        let pen = if r.k == n { 0.0 } else { c_pen(&r.center, collection)? };
        rows.push(OrderRow {
            k: r.k,
            c_obj: obj,
            c_pen: pen,
            total: obj + pen,
            e_mse: mse_from_eigenvalues(&mse_eigs, r.k),
            e_hybrid: hybrid[r.k],
            lambda_used: r.lambda_best.as_slice().to_vec(),
            solve: Some(r.into()),
        });
    }
    let totals: Vec<f64> = rows.iter().map(|row| row.total).collect();
    let selections = Selections {
        proposed: argmin_parsimonious(&totals).unwrap_or(0),
        hybrid: argmin_parsimonious(&hybrid).unwrap_or(0),
        mse: mse_eigs.iter().filter(|&&d| d > MSE_THRESHOLD + TIE_TOL).count(),
        svd_elbow: select_order_svd_elbow(collection).ok(),
    };
    Ok(OrderReport { rows, selections })
}

/// Proposed rule: argmin over k of `c_obj(k) + c_pen(k)`, with total 1 at k = 0.
pub fn select_order_proposed(
    collection: &SubspaceCollection,
    config: &SolverConfig,
    options: OrderOptions,
) -> Result<(usize, OrderReport)> {
    let report = order_report(collection, config, options)?;
    Ok((report.selections.proposed, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_method_finds_sharp_knee() {
        assert_eq!(l_method(&[10.0, 9.8, 1.0, 0.9, 0.8, 0.7]).unwrap(), 2);
        assert!(matches!(l_method(&[3.0, 2.0, 1.0]), Err(GmebError::TooFewValues { count: 3 })));
    }

    #[test]
    fn ties_go_to_smaller_index() {
        assert_eq!(argmin_parsimonious(&[1.0, 0.5, 0.5, 0.7]), Some(1));
        assert_eq!(argmin_parsimonious(&[0.0, 1e-14]), Some(0));
        assert_eq!(argmin_parsimonious(&[]), None);
    }

    #[test]
    fn orthogonal_lines_split_evenly() {
        let c = SubspaceCollection::new(vec![
            Basis::coordinate(3, &[0]).unwrap(),
            Basis::coordinate(3, &[1]).unwrap(),
        ])
        .unwrap();
        assert_eq!(select_order_mse(&c), 0);
    }

    #[test]
    fn identical_items_select_their_dimension() {
        let x = Basis::coordinate(6, &[1, 3]).unwrap();
        let c = SubspaceCollection::new(vec![x.clone(), x.clone(), x]).unwrap();
        assert_eq!(select_order_mse(&c), 2);
        let (k, report) = select_order_proposed(&c, &SolverConfig::default(), OrderOptions::default()).unwrap();
        assert_eq!(k, 2);
        assert!(report.rows[2].total.abs() < 1e-12);
        assert_eq!(report.selections.hybrid, 2);
    }

    #[test]
    fn full_space_penalty_is_rejected() {
        let u = Basis::coordinate(2, &[0, 1]).unwrap();
        let c = SubspaceCollection::new(vec![Basis::coordinate(2, &[0]).unwrap()]).unwrap();
        assert!(matches!(c_pen(&u, &c), Err(GmebError::FullSpace { n: 2 })));
    }
}
