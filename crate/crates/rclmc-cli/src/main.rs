//! Benchmark CLI for random coordinate Langevin Monte Carlo.
//!
//! Subcommands: `sample` (one ensemble → CSV series), `benchmark` (several
//! configs at matched cost), `verify` (built-in statistical suites), `bounds`
//! (evaluate a convergence bound), `plan` (solve a stopping rule for (h, M)).
//!
//! Exit codes: 0 success, 1 verification failure or runtime error, 2
//! usage/config error.

mod output;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rclmc::bounds::{
    lmc_bound_case1, lmc_bound_case2, lmc_stopping_case1, lmc_stopping_case2, rclmc_bound_case1,
    rclmc_bound_case2, rclmc_stopping_case1, rclmc_stopping_case2, BoundReport, StoppingPlan,
};
use rclmc::config::{build_target, BenchmarkConfig, RunConfig};
use rclmc::harness::{ordering_at_matched_cost, run_benchmark, HarnessError};
use rclmc::sampler::{run_ensemble_with, RunOptions};
use rclmc::schedule::parse_phi_spec;
use rclmc::verify::{run_suite, SUITE_NAMES};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rclmc", version, about = "Random coordinate Langevin Monte Carlo benchmark harness")]
struct Cli {
    /// Worker threads (0 = library default); RCLMC_THREADS is the fallback.
    /// Affects speed only, never output.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one ensemble and write its error-versus-cost series.
    Sample {
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write raw chain states to snapshots.bin.
        #[arg(long)]
        binary: bool,
    },
    /// Run several configs over one target and align curves at matched cost.
    Benchmark {
        /// Benchmark configuration (JSON, {"configs": [...]}).
        #[arg(long)]
        config: PathBuf,
        /// Override every config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a built-in verification suite; exits 0 iff every check passes.
    Verify {
        /// One of: recursion, contraction, stationarity, lowerbound,
        /// bounds-dominance.
        #[arg(long)]
        suite: String,
    },
    /// Evaluate a Wasserstein convergence bound.
    Bounds(BoundsArgs),
    /// Solve a stopping rule for (h, M) at a target accuracy.
    Plan(PlanArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Lmc,
    Rclmc,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    method: MethodArg,
    /// 1 = Lipschitz gradient, 2 = Lipschitz gradient and Hessian.
    #[arg(long)]
    case: u8,
    #[arg(long)]
    w0: f64,
    #[arg(long)]
    mu: f64,
    /// Global gradient Lipschitz constant L.
    #[arg(long)]
    l: f64,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    m: u64,
    /// Dimension (LMC bounds).
    #[arg(long)]
    d: Option<usize>,
    /// Global Hessian Lipschitz constant H (LMC case 2).
    #[arg(long)]
    hess: Option<f64>,
    /// Per-coordinate L_i, comma separated (RC-LMC bounds).
    #[arg(long, value_delimiter = ',')]
    lips: Option<Vec<f64>>,
    /// Per-coordinate H_i, comma separated (RC-LMC case 2; default zeros).
    #[arg(long, value_delimiter = ',')]
    hess_coord: Option<Vec<f64>>,
    /// Coordinate distribution spec (RC-LMC): uniform | alpha:<a> |
    /// hessian-opt | explicit:[...].
    #[arg(long, default_value = "uniform")]
    phi: String,
    /// Print the report as JSON only.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    method: MethodArg,
    #[arg(long)]
    case: u8,
    /// Target accuracy ε.
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    w0: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    l: f64,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    hess: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    lips: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    hess_coord: Option<Vec<f64>>,
    /// Power weight α for φ_i ∝ L_i^α (RC-LMC case 1).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    json: bool,
}

/// Errors that map to exit code 2 (usage/config) vs 1 (runtime/verification).
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match dispatch(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn init_threads(flag: usize) {
    let n = if flag > 0 {
        flag
    } else {
        std::env::var("RCLMC_THREADS").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
    };
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::usage(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    })
}

fn ensure_out_dir(out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::usage(format!("cannot create {}: {e}", out.display())))
}

fn dispatch(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Sample { config, seed, binary } => cmd_sample(&cli.out, &config, seed, binary),
        Command::Benchmark { config, seed } => cmd_benchmark(&cli.out, &config, seed),
        Command::Verify { suite } => cmd_verify(&suite),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Plan(args) => cmd_plan(args),
    }
}

fn cmd_sample(
    out: &Path,
    config_path: &Path,
    seed: Option<u64>,
    binary: bool,
) -> Result<ExitCode, Failure> {
    let mut config: RunConfig = load_json(config_path)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    let built = build_target(&config.target).map_err(|e| Failure::usage(e.to_string()))?;
    config.validate(&built.model).map_err(|e| Failure::usage(e.to_string()))?;
    ensure_out_dir(out)?;

    let record = run_ensemble_with(&config, &built.model, RunOptions { capture_states: binary })
        .map_err(|e| Failure::Runtime(e.into()))?;

    let mut written = Vec::new();
    for (index, obs) in config.observables.iter().enumerate() {
        let rows = output::series_for_observable(&record, index);
        let path = out.join(format!("sample_{}.csv", obs.label()));
        output::write_error_series(&path, record.config_hash, &rows)?;
        written.push(path);
    }
    if binary {
        let path = out.join("snapshots.bin");
        output::write_binary_snapshots(&path, &record)?;
        written.push(path);
    }

    let last = record.snapshots.last().expect("at least the initial snapshot");
    println!(
        "{} on target d={} | chains={} iterations={} seed={}",
        rclmc::harness::method_label(&config),
        record.dim,
        record.chains,
        config.iterations,
        config.master_seed
    );
    println!(
        "final m={} elapsed={:.6} nominal_cost={} work_cost={}",
        last.m, last.elapsed_mean, last.nominal_cost, last.work_cost_mean
    );
    println!(
        "final E|x|^2 = {:.6} (stderr {:.3e})",
        last.moments.second_moment, last.moments.second_moment_se
    );
    for obs in &last.observables {
        match (obs.reference, obs.error) {
            (Some(r), Some(e)) => println!(
                "  {}: mean={:.6} stderr={:.3e} reference={:.6} error={:.3e}",
                obs.label, obs.mean, obs.stderr, r, e
            ),
            _ => println!("  {}: mean={:.6} stderr={:.3e}", obs.label, obs.mean, obs.stderr),
        }
    }
    if record.diverged_chains > 0 {
        println!("diverged chains excluded from statistics: {}", record.diverged_chains);
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_benchmark(out: &Path, config_path: &Path, seed: Option<u64>) -> Result<ExitCode, Failure> {
    let mut bench: BenchmarkConfig = load_json(config_path)?;
    if let Some(seed) = seed {
        for c in &mut bench.configs {
            c.master_seed = seed;
        }
    }
    for config in &bench.configs {
        let built = build_target(&config.target).map_err(|e| Failure::usage(e.to_string()))?;
        config.validate(&built.model).map_err(|e| Failure::usage(e.to_string()))?;
    }
    ensure_out_dir(out)?;

    let mut result = run_benchmark(&bench.configs).map_err(|e| match e {
        HarnessError::Empty
        | HarnessError::MixedTargets { .. }
        | HarnessError::MixedObservables { .. } => Failure::usage(e.to_string()),
        other => Failure::Runtime(other.into()),
    })?;

    // Labels double as file names and column names; disambiguate repeats.
    let mut seen = std::collections::HashMap::new();
    for curve in &mut result.curves {
        let count = seen.entry(curve.label.clone()).or_insert(0usize);
        *count += 1;
        if *count > 1 {
            curve.label = format!("{}_{}", curve.label, count);
        }
    }

    let bench_hash = rclmc::config::fnv1a64(
        serde_json::to_string(&bench).expect("serializable").as_bytes(),
    );
    println!("benchmark over {} configs, observable {}", result.curves.len(), result.observable);
    for curve in &result.curves {
        let path = out.join(format!("benchmark_{}.csv", curve.label));
        output::write_error_series(&path, curve.config_hash, &curve.rows)?;
        println!("wrote {}", path.display());
    }
    let combined = out.join("benchmark_combined.csv");
    output::write_benchmark_combined(&combined, bench_hash, &result, ',', false)?;
    println!("wrote {}", combined.display());
    let dat = out.join("benchmark.dat");
    output::write_benchmark_combined(&dat, bench_hash, &result, ' ', true)?;
    println!("wrote {}", dat.display());

    for summary in ordering_at_matched_cost(&result, 0.2, 4.0) {
        println!(
            "past burn-in, error({}) <= error({}) + 4se at {}/{} matched-cost points",
            summary.better, summary.worse, summary.satisfied, summary.total
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(suite: &str) -> Result<ExitCode, Failure> {
    let report = run_suite(suite).ok_or_else(|| {
        Failure::usage(format!("unknown suite {suite:?}; expected one of {SUITE_NAMES:?}"))
    })?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    eprintln!(
        "suite {}: {} ({} checks)",
        report.suite,
        if report.passed { "PASS" } else { "FAIL" },
        report.checks.len()
    );
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn print_bound(report: &BoundReport, json: bool) {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    if json {
        println!("{text}");
        return;
    }
    println!("bound      = {}", report.bound);
    println!("  decay    = {}", report.decay);
    println!("  bias     = {}", report.bias);
    println!(
        "admissible = {}{}",
        report.admissible,
        report.violated.as_deref().map(|v| format!(" (violated: {v})")).unwrap_or_default()
    );
    println!("{text}");
}

fn rclmc_inputs(args_lips: &Option<Vec<f64>>) -> Result<Vec<f64>, Failure> {
    args_lips
        .clone()
        .ok_or_else(|| Failure::usage("--lips is required for RC-LMC bounds".to_string()))
}

fn cmd_bounds(args: BoundsArgs) -> Result<ExitCode, Failure> {
    let report = match (args.method, args.case) {
        (MethodArg::Lmc, 1) => {
            let d = args.d.ok_or_else(|| Failure::usage("--d is required for LMC bounds"))?;
            lmc_bound_case1(args.w0, args.mu, args.l, d, args.h, args.m)
        }
        (MethodArg::Lmc, 2) => {
            let d = args.d.ok_or_else(|| Failure::usage("--d is required for LMC bounds"))?;
            lmc_bound_case2(args.w0, args.mu, args.l, args.hess.unwrap_or(0.0), d, args.h, args.m)
        }
        (MethodArg::Rclmc, case @ (1 | 2)) => {
            let lips = rclmc_inputs(&args.lips)?;
            let hess = args.hess_coord.clone().unwrap_or_else(|| vec![0.0; lips.len()]);
            let dist = parse_phi_spec(&args.phi, &lips, Some(&hess), args.h)
                .map_err(|e| Failure::usage(e.to_string()))?;
            let phi = dist.probs().to_vec();
            if case == 1 {
                rclmc_bound_case1(args.w0, args.mu, args.l, &lips, &phi, args.h, args.m)
            } else {
                rclmc_bound_case2(args.w0, args.mu, args.l, &lips, &hess, &phi, args.h, args.m)
            }
        }
        (_, case) => return Err(Failure::usage(format!("--case must be 1 or 2, got {case}"))),
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    print_bound(&report, args.json);
    Ok(ExitCode::SUCCESS)
}

fn print_plan(plan: &StoppingPlan, json: bool) {
    let text = serde_json::to_string_pretty(plan).expect("plan serializes");
    if json {
        println!("{text}");
        return;
    }
    println!("h = {}", plan.h);
    println!("M = {}", plan.iterations);
    if let Some(phi) = &plan.phi {
        println!("phi = {phi:?}");
    }
    if plan.capped {
        println!("step size capped by the admissibility condition");
    }
    if let Some(note) = &plan.note {
        println!("note: {note}");
    }
    println!("{text}");
}

fn cmd_plan(args: PlanArgs) -> Result<ExitCode, Failure> {
    let plan = match (args.method, args.case) {
        (MethodArg::Lmc, 1) => {
            let d = args.d.ok_or_else(|| Failure::usage("--d is required for LMC plans"))?;
            lmc_stopping_case1(args.eps, args.w0, args.mu, args.l, d)
        }
        (MethodArg::Lmc, 2) => {
            let d = args.d.ok_or_else(|| Failure::usage("--d is required for LMC plans"))?;
            lmc_stopping_case2(args.eps, args.w0, args.mu, args.l, args.hess.unwrap_or(0.0), d)
        }
        (MethodArg::Rclmc, 1) => {
            let lips = rclmc_inputs(&args.lips)?;
            rclmc_stopping_case1(args.eps, args.w0, args.mu, args.l, &lips, args.alpha)
        }
        (MethodArg::Rclmc, 2) => {
            let lips = rclmc_inputs(&args.lips)?;
            let hess = args.hess_coord.clone().unwrap_or_else(|| vec![0.0; lips.len()]);
            rclmc_stopping_case2(args.eps, args.w0, args.mu, args.l, &lips, &hess)
        }
        (_, case) => return Err(Failure::usage(format!("--case must be 1 or 2, got {case}"))),
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    print_plan(&plan, args.json);
    Ok(ExitCode::SUCCESS)
}
