//! Monte Carlo harnesses: center accuracy, warm-start iteration counts, and
//! order-selection accuracy. Trials run on a rayon pool and every trial owns
//! a seed derived from the base seed, so output does not depend on the
//! number of threads.

pub mod io;
pub mod mds;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{derive_seed, generate, DatasetSpec, Model};
use crate::error::{GmebError, Result};
use crate::grassmann::p2s_unchecked;
use crate::order::{order_report, OrderOptions};
use crate::solver::{solve, solve_observed, warm_start_sweep, SolverConfig};

const STREAM_TRIALS: u64 = 101;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Accuracy,
    WarmStart,
    OrderSelection,
    NoCommonSubspace,
}

impl std::str::FromStr for ExperimentKind {
    type Err = GmebError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Self::Accuracy),
            "warm-start" => Ok(Self::WarmStart),
            "order-selection" => Ok(Self::OrderSelection),
            "no-common-subspace" => Ok(Self::NoCommonSubspace),
            other => Err(GmebError::InvalidConfig(format!("unknown experiment `{other}`"))),
        }
    }
}

/// Values swept by the order-selection experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Ambient(Vec<usize>),
    Snr(Vec<f64>),
}

impl SweepAxis {
    fn points(&self) -> Vec<f64> {
        match self {
            SweepAxis::Ambient(v) => v.iter().map(|&n| n as f64).collect(),
            SweepAxis::Snr(v) => v.clone(),
        }
    }

    fn len(&self) -> usize {
        match self {
            SweepAxis::Ambient(v) => v.len(),
            SweepAxis::Snr(v) => v.len(),
        }
    }

    fn apply(&self, index: usize, spec: &mut DatasetSpec) {
        match self {
            SweepAxis::Ambient(v) => spec.n = v[index],
            SweepAxis::Snr(v) => spec.snr_db = Some(v[index]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub trials: usize,
    pub dataset: DatasetSpec,
    pub solver: SolverConfig,
    /// Order-selection axis; ignored by the other experiments.
    pub axis: Option<SweepAxis>,
    /// Rank solved by the accuracy experiment (defaults to the planted order).
    pub k: Option<usize>,
    /// Largest rank in the warm-start experiment (defaults to `max p_i`).
    pub k_max: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Accuracy,
            trials: 20,
            dataset: DatasetSpec::default(),
            solver: SolverConfig::default(),
            axis: None,
            k: None,
            k_max: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(GmebError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.axis.as_ref().is_some_and(|a| a.len() == 0) {
            return Err(GmebError::InvalidConfig("sweep axis is empty".into()));
        }
        self.solver.validate()
    }

    /// Dataset for one trial, with its own seed.
    pub fn trial_spec(&self, trial: usize) -> DatasetSpec {
        DatasetSpec { seed: derive_seed(self.dataset.seed, STREAM_TRIALS, trial as u64), ..self.dataset.clone() }
    }
}

/// Runs `f` on a pool sized by `GMEB_THREADS` (default: all cores).
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let threads = std::env::var("GMEB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| GmebError::InvalidConfig(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Per-iteration record of one accuracy trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub trial: usize,
    pub seed: u64,
    pub t: usize,
    /// Squared-chordal distance from the current iterate to the truth.
    pub error: f64,
    /// Same, for the lowest-primal iterate so far.
    pub best_error: f64,
    pub elapsed_s: f64,
    pub primal: f64,
    pub dual: f64,
}

/// Median and envelope of the error across trials at one iteration index.
/// Trials that stopped earlier contribute their final value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummaryRow {
    pub t: usize,
    pub median_error: f64,
    pub min_error: f64,
    pub max_error: f64,
    pub median_best_error: f64,
    pub median_elapsed_s: f64,
}

#[derive(Clone, Debug)]
pub struct AccuracyOutput {
    pub rows: Vec<AccuracyRow>,
    pub summary: Vec<AccuracySummaryRow>,
}

pub fn run_accuracy(config: &ExperimentConfig) -> Result<AccuracyOutput> {
    config.validate()?;
    let trials = with_pool(|| (0..config.trials).into_par_iter().map(|i| accuracy_trial(config, i)).collect::<Result<Vec<_>>>())??;
    let summary = summarize_accuracy(&trials);
    Ok(AccuracyOutput { rows: trials.into_iter().flatten().collect(), summary })
}

fn accuracy_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<AccuracyRow>> {
    let spec = config.trial_spec(trial);
    let data = generate(&spec)?;
    let truth = data
        .truth_center
        .as_ref()
        .ok_or_else(|| GmebError::InvalidConfig("accuracy experiment needs a planted center".into()))?;
    let k = config.k.unwrap_or(data.truth_k);
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut best = (f64::INFINITY, f64::INFINITY);
    solve_observed(&data.collection, k, &config.solver, None, |view| {
        let elapsed_s = start.elapsed().as_secs_f64();
        let error = p2s_unchecked(view.center.matrix(), truth.matrix());
        if view.primal < best.0 {
            best = (view.primal, error);
        }
        rows.push(AccuracyRow {
            trial,
            seed: spec.seed,
            t: view.t,
            error,
            best_error: best.1,
            elapsed_s,
            primal: view.primal,
            dual: view.dual,
        });
    })?;
    Ok(rows)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

fn summarize_accuracy(trials: &[Vec<AccuracyRow>]) -> Vec<AccuracySummaryRow> {
    let longest = trials.iter().map(Vec::len).max().unwrap_or(0);
    (0..longest)
        .map(|t| {
            let at: Vec<&AccuracyRow> = trials.iter().filter_map(|rows| rows.get(t).or(rows.last())).collect();
            let mut err: Vec<f64> = at.iter().map(|r| r.error).collect();
            let mut best: Vec<f64> = at.iter().map(|r| r.best_error).collect();
            let mut time: Vec<f64> = at.iter().map(|r| r.elapsed_s).collect();
            AccuracySummaryRow {
                t,
                min_error: err.iter().copied().fold(f64::INFINITY, f64::min),
                max_error: err.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                median_error: median(&mut err),
                median_best_error: median(&mut best),
                median_elapsed_s: median(&mut time),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarmStartRow {
    pub trial: usize,
    pub seed: u64,
    pub k: usize,
    pub iters_uniform: usize,
    pub iters_warm: usize,
    pub gap_uniform: f64,
    pub gap_warm: f64,
    pub dual_uniform: f64,
    pub dual_warm: f64,
}

impl WarmStartRow {
    pub fn warm_wins(&self) -> bool {
        self.iters_warm < self.iters_uniform
    }
}

/// Iteration counts under uniform and warm initialization for k = 2..=k_max.
pub fn run_warmstart(config: &ExperimentConfig) -> Result<Vec<WarmStartRow>> {
    config.validate()?;
    let trials = with_pool(|| (0..config.trials).into_par_iter().map(|i| warmstart_trial(config, i)).collect::<Result<Vec<_>>>())??;
    Ok(trials.into_iter().flatten().collect())
}

fn warmstart_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<WarmStartRow>> {
    let spec = config.trial_spec(trial);
    let data = generate(&spec)?;
    let k_max = config.k_max.unwrap_or_else(|| data.collection.max_dim());
    if k_max < 2 {
        return Err(GmebError::InvalidConfig("warm start needs at least two ranks".into()));
    }
    let sweep = warm_start_sweep(&data.collection, k_max, &config.solver)?;
    sweep
        .into_iter()
        .skip(1)
        .map(|entry| {
            let warm = entry.result?;
            let cold = solve(&data.collection, entry.k, &config.solver, None)?;
            Ok(WarmStartRow {
                trial,
                seed: spec.seed,
                k: entry.k,
                iters_uniform: cold.iterations,
                iters_warm: warm.iterations,
                gap_uniform: cold.duality_gap,
                gap_warm: warm.duality_gap,
                dual_uniform: cold.dual_cost,
                dual_warm: warm.dual_cost,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderTrialRow {
    pub axis: f64,
    pub trial: usize,
    pub seed: u64,
    pub truth_k: usize,
    pub proposed: usize,
    pub hybrid: usize,
    pub mse: usize,
    pub svd_elbow: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderSummaryRow {
    pub axis: f64,
    pub rule: String,
    pub accuracy: f64,
    pub mean_order: f64,
}

#[derive(Clone, Debug)]
pub struct OrderOutput {
    pub rows: Vec<OrderTrialRow>,
    pub summary: Vec<OrderSummaryRow>,
}

/// All four rules per trial and axis point. The no-common-subspace variant
/// draws independent random subspaces, so the correct order is 0.
pub fn run_order_selection(config: &ExperimentConfig) -> Result<OrderOutput> {
    config.validate()?;
    let mut base = config.clone();
    if config.experiment == ExperimentKind::NoCommonSubspace {
        base.dataset.model = Model::Random;
    }
    let axis_len = base.axis.as_ref().map_or(1, SweepAxis::len);
    let jobs: Vec<(usize, usize)> = (0..axis_len).flat_map(|a| (0..base.trials).map(move |t| (a, t))).collect();
    let mut rows = with_pool(|| jobs.par_iter().map(|&(a, t)| order_trial(&base, a, t)).collect::<Result<Vec<_>>>())??;
    rows.sort_by(|x, y| x.axis.total_cmp(&y.axis).then(x.trial.cmp(&y.trial)));
    let summary = summarize_orders(&rows);
    Ok(OrderOutput { rows, summary })
}

fn order_trial(config: &ExperimentConfig, axis_index: usize, trial: usize) -> Result<OrderTrialRow> {
    let mut spec = config.trial_spec(trial);
    let axis = match &config.axis {
        Some(axis) => {
            axis.apply(axis_index, &mut spec);
            axis.points()[axis_index]
        }
        None => spec.n as f64,
    };
    // Each axis point gets its own data, not a resized copy of the last one.
    spec.seed = derive_seed(spec.seed, STREAM_TRIALS + 1, axis_index as u64);
    let data = generate(&spec)?;
    let report = order_report(&data.collection, &config.solver, OrderOptions::default())?;
    let s = report.selections;
    Ok(OrderTrialRow {
        axis,
        trial,
        seed: spec.seed,
        truth_k: data.truth_k,
        proposed: s.proposed,
        hybrid: s.hybrid,
        mse: s.mse,
        svd_elbow: s.svd_elbow,
    })
}

type RulePick = fn(&OrderTrialRow) -> Option<usize>;

fn summarize_orders(rows: &[OrderTrialRow]) -> Vec<OrderSummaryRow> {
    let mut axes: Vec<f64> = rows.iter().map(|r| r.axis).collect();
    axes.dedup();
    let rules: [(&str, RulePick); 4] = [
        ("proposed", |r| Some(r.proposed)),
        ("hybrid", |r| Some(r.hybrid)),
        ("mse", |r| Some(r.mse)),
        ("svd-elbow", |r| r.svd_elbow),
    ];
    let mut out = Vec::new();
    for axis in axes {
        let at: Vec<&OrderTrialRow> = rows.iter().filter(|r| r.axis == axis).collect();
        for (name, pick) in rules {
            let chosen: Vec<(usize, usize)> = at.iter().filter_map(|r| pick(r).map(|k| (k, r.truth_k))).collect();
            let count = chosen.len().max(1) as f64;
            out.push(OrderSummaryRow {
                axis,
                rule: name.to_string(),
                accuracy: chosen.iter().filter(|(k, t)| k == t).count() as f64 / at.len().max(1) as f64,
                mean_order: chosen.iter().map(|(k, _)| *k as f64).sum::<f64>() / count,
            });
        }
    }
    out
}
