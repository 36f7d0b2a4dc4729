use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gmeb::datagen::{generate, DatasetSpec, Model};
use gmeb::experiments::io::{
    load_collection, parse_weights, save_collection, save_csv, write_csv, write_json, ResultJson, TruthJson,
};
use gmeb::experiments::mds::mds_embed;
use gmeb::experiments::{
    run_accuracy, run_order_selection, run_warmstart, ExperimentConfig, ExperimentKind, SweepAxis,
};
use gmeb::grassmann::principal_angles;
use gmeb::order::{order_report, OrderOptions};
use gmeb::solver::{solve, SimplexMap, SolverConfig, StepMode};
use gmeb::{GmebError, Result};
use nalgebra::DMatrix;

#[derive(Parser)]
#[command(name = "gmeb", version, about = "Minimax centers and order selection for subspace collections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the minimax center of one rank.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        /// Initial weights: a JSON file or inline JSON (array, or object with `lambda`).
        #[arg(long)]
        warm_start: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the result JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve every rank and apply the order-selection rules.
    Order {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Rule::All)]
        rule: Rule,
        /// Solve ranks independently from uniform weights.
        #[arg(long)]
        no_warm_start: bool,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the full report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic collection and its truth sidecar.
    Gen(GenArgs),
    /// Run a Monte Carlo experiment and write CSV rows.
    Experiment(ExperimentArgs),
    /// Embed points in the plane by classical MDS.
    Mds {
        /// A `.gss` collection (pairwise chordal distances) or a CSV distance matrix.
        #[arg(long)]
        input: PathBuf,
        /// Result JSON whose center is embedded as an extra last point.
        #[arg(long)]
        center: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Proposed,
    Hybrid,
    Mse,
    SvdElbow,
    All,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// adaptive, backtracking or diminishing.
    #[arg(long)]
    step_mode: Option<String>,
    /// project (Euclidean) or normalize (clamp and rescale).
    #[arg(long)]
    simplex_map: Option<String>,
}

impl SolverArgs {
    fn apply(&self, mut config: SolverConfig) -> Result<SolverConfig> {
        if let Some(a) = self.a {
            config.a = a;
        }
        if let Some(eta) = self.eta {
            config.eta = eta;
        }
        if let Some(zeta) = self.zeta {
            config.zeta = zeta;
        }
        if let Some(beta) = self.beta {
            config.beta = beta;
        }
        if let Some(max_iter) = self.max_iter {
            config.max_iter = max_iter;
        }
        if let Some(mode) = &self.step_mode {
            config.step_mode = mode.parse::<StepMode>()?;
        }
        if let Some(map) = &self.simplex_map {
            config.simplex_map = map.parse::<SimplexMap>()?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    NestedBall,
    Arc,
    Random,
}

#[derive(Args)]
struct GenArgs {
    /// Full dataset spec as JSON; the flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long)]
    m3: Option<usize>,
    /// Completed dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    orthogonal_completion: bool,
    /// Draw small-ball points from the interior instead of the boundary.
    #[arg(long)]
    small_ball_interior: bool,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Collection path; the truth sidecar goes next to it as `<stem>.truth.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Accuracy,
    WarmStart,
    OrderSelection,
    NoCommonSubspace,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: KindArg,
    /// Experiment config JSON; defaults to a built-in setup for the kind.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Ambient dimensions to sweep, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "snr_axis")]
    n_axis: Option<Vec<usize>>,
    /// SNR values (dB) to sweep, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_axis: Option<Vec<f64>>,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV of per-trial rows; a summary goes to `<stem>.summary.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve { input, k, warm_start, solver, out } => cmd_solve(&input, k, warm_start.as_deref(), &solver, out),
        Command::Order { input, rule, no_warm_start, solver, out } => cmd_order(&input, rule, no_warm_start, &solver, out),
        Command::Gen(args) => cmd_gen(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Mds { input, center, out } => cmd_mds(&input, center.as_deref(), out),
    }
}

fn cmd_solve(input: &Path, k: usize, warm: Option<&str>, solver: &SolverArgs, out: Option<PathBuf>) -> Result<()> {
    let collection = load_collection(input)?;
    let config = solver.apply(SolverConfig::default())?;
    let init = match warm {
        Some(text) => {
            let path = Path::new(text);
            let json = if path.is_file() { fs::read_to_string(path)? } else { text.to_string() };
            Some(parse_weights(&json)?)
        }
        None => None,
    };
    let result = solve(&collection, k, &config, init.as_ref())?;
    let json = ResultJson::from(&result);
    match out {
        Some(path) => {
            write_json(&json, &path)?;
            println!(
                "k={} primal_cost={:.9} dual_cost={:.9} duality_gap={:.3e} iterations={} converged_reason={:?}",
                result.k, result.primal_cost, result.dual_cost, result.duality_gap, result.iterations, result.converged_reason
            );
        }
        None => println!("{}", serde_json::to_string_pretty(&json)?),
    }
    Ok(())
}

fn cmd_order(input: &Path, rule: Rule, no_warm: bool, solver: &SolverArgs, out: Option<PathBuf>) -> Result<()> {
    let collection = load_collection(input)?;
    let config = solver.apply(SolverConfig::default())?;
    let report = order_report(&collection, &config, OrderOptions { warm_start: !no_warm })?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "{:>3} {:>10} {:>10} {:>10} {:>10} {:>10}", "k", "c_obj", "c_pen", "total", "E_mse", "E_hybrid")?;
    for row in &report.rows {
        writeln!(
            w,
            "{:>3} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            row.k, row.c_obj, row.c_pen, row.total, row.e_mse, row.e_hybrid
        )?;
    }
    let s = report.selections;
    let elbow = s.svd_elbow.map_or_else(|| "none".to_string(), |k| k.to_string());
    match rule {
        Rule::Proposed => writeln!(w, "proposed: {}", s.proposed)?,
        Rule::Hybrid => writeln!(w, "hybrid: {}", s.hybrid)?,
        Rule::Mse => writeln!(w, "mse: {}", s.mse)?,
        Rule::SvdElbow => writeln!(w, "svd-elbow: {elbow}")?,
        Rule::All => {
            writeln!(w, "proposed: {}", s.proposed)?;
            writeln!(w, "hybrid: {}", s.hybrid)?;
            writeln!(w, "mse: {}", s.mse)?;
            writeln!(w, "svd-elbow: {elbow}")?;
        }
    }
    if let Some(path) = out {
        write_json(&report, &path)?;
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => serde_json::from_str::<DatasetSpec>(&fs::read_to_string(path)?)
            .map_err(|e| GmebError::Schema(format!("dataset spec: {e}")))?,
        None => DatasetSpec::default(),
    };
    if let Some(model) = args.model {
        spec.model = match model {
            ModelArg::NestedBall => Model::NestedBall,
            ModelArg::Arc => Model::Arc,
            ModelArg::Random => Model::Random,
        };
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = args.$field { spec.$field = v; })* };
    }
    set!(n, k0, eps1, eps2, m1, m2, m3, dims, seed);
    if args.k2.is_some() {
        spec.k2 = args.k2;
    }
    if args.snr.is_some() {
        spec.snr_db = args.snr;
    }
    if args.orthogonal_completion {
        spec.orthogonal_completion = true;
    }
    if args.small_ball_interior {
        spec.small_ball_boundary = false;
    }
    let data = generate(&spec)?;
    save_collection(&data.collection, &args.out)?;
    let truth_path = sidecar(&args.out, "truth.json");
    write_json(&TruthJson::from(&data), &truth_path)?;
    println!(
        "wrote {} subspaces to {} (truth in {})",
        data.collection.len(),
        args.out.display(),
        truth_path.display()
    );
    Ok(())
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Built-in setups, one per experiment kind.
fn preset(kind: ExperimentKind) -> ExperimentConfig {
    let base = ExperimentConfig { experiment: kind, ..Default::default() };
    match kind {
        ExperimentKind::Accuracy => base,
        ExperimentKind::WarmStart => ExperimentConfig {
            trials: 100,
            dataset: DatasetSpec { n: 10, k0: 4, m1: 35, m2: 15, dims: vec![4, 5, 6], ..Default::default() },
            ..base
        },
        ExperimentKind::OrderSelection => ExperimentConfig {
            dataset: DatasetSpec {
                k0: 10,
                k2: Some(15),
                eps1: 1.0,
                eps2: 0.5,
                m1: 10,
                m2: 10,
                dims: (10..=20).collect(),
                snr_db: Some(9.0),
                ..Default::default()
            },
            axis: Some(SweepAxis::Ambient(vec![30, 100, 200])),
            ..base
        },
        ExperimentKind::NoCommonSubspace => ExperimentConfig {
            dataset: DatasetSpec { model: Model::Random, m1: 50, m2: 0, dims: vec![3, 4, 5], ..Default::default() },
            axis: Some(SweepAxis::Ambient(vec![10, 20, 40])),
            ..base
        },
    }
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let kind = match args.kind {
        KindArg::Accuracy => ExperimentKind::Accuracy,
        KindArg::WarmStart => ExperimentKind::WarmStart,
        KindArg::OrderSelection => ExperimentKind::OrderSelection,
        KindArg::NoCommonSubspace => ExperimentKind::NoCommonSubspace,
    };
    let mut config = match &args.config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(&fs::read_to_string(path)?)
            .map_err(|e| GmebError::Schema(format!("experiment config: {e}")))?,
        None => preset(kind),
    };
    config.experiment = kind;
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(seed) = args.seed {
        config.dataset.seed = seed;
    }
    if let Some(ns) = args.n_axis {
        config.axis = Some(SweepAxis::Ambient(ns));
    }
    if let Some(snrs) = args.snr_axis {
        config.axis = Some(SweepAxis::Snr(snrs));
    }
    config.solver = args.solver.apply(config.solver)?;

    let out = args.out.as_deref();
    match kind {
        ExperimentKind::Accuracy => {
            let output = run_accuracy(&config)?;
            emit(&output.rows, &output.summary, out)
        }
        ExperimentKind::WarmStart => {
            let rows = run_warmstart(&config)?;
            let wins = rows.iter().filter(|r| r.warm_wins()).count();
            eprintln!("warm start used fewer iterations in {wins} of {} (trial, k) pairs", rows.len());
            emit(&rows, &[] as &[()], out)
        }
        ExperimentKind::OrderSelection | ExperimentKind::NoCommonSubspace => {
            let output = run_order_selection(&config)?;
            emit(&output.rows, &output.summary, out)
        }
    }
}

/// Rows go to `out` (or stdout); a nonempty summary goes beside it (or stderr).
fn emit<R: serde::Serialize, S: serde::Serialize>(rows: &[R], summary: &[S], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            save_csv(rows, path)?;
            if !summary.is_empty() {
                save_csv(summary, &sidecar(path, "summary.csv"))?;
            }
        }
        None => {
            write_csv(rows, io::stdout().lock())?;
            if !summary.is_empty() {
                write_csv(summary, io::stderr().lock())?;
            }
        }
    }
    Ok(())
}

fn cmd_mds(input: &Path, center: Option<&Path>, out: Option<PathBuf>) -> Result<()> {
    let distances = if input.extension().is_some_and(|e| e == "gss") {
        let collection = load_collection(input)?;
        let mut points: Vec<_> = collection.into_items();
        if let Some(path) = center {
            let result: ResultJson = serde_json::from_str(&fs::read_to_string(path)?)
                .map_err(|e| GmebError::Schema(format!("result JSON: {e}")))?;
            points.push(result.center.to_basis()?);
        }
        let m = points.len();
        let mut d = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..i {
                let chordal = principal_angles(&points[i], &points[j])?.squared_chordal().sqrt();
                d[(i, j)] = chordal;
                d[(j, i)] = chordal;
            }
        }
        d
    } else {
        read_distance_csv(input)?
    };
    let embedding = mds_embed(&distances)?;
    let rows: Vec<(usize, f64, f64)> =
        (0..embedding.coords.nrows()).map(|i| (i, embedding.coords[(i, 0)], embedding.coords[(i, 1)])).collect();
    #[derive(serde::Serialize)]
    struct Point {
        index: usize,
        x: f64,
        y: f64,
    }
    let points: Vec<Point> = rows.into_iter().map(|(index, x, y)| Point { index, x, y }).collect();
    match out {
        Some(path) => save_csv(&points, &path),
        None => write_csv(&points, io::stdout().lock()),
    }
}

fn read_distance_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| GmebError::Parse { line: i + 1, message: format!("cannot parse `{f}`") })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let m = rows.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != m) {
        return Err(GmebError::Parse { line: bad + 1, message: format!("expected {m} columns") });
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}
