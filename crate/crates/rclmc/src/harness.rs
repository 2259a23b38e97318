//! Error-versus-cost benchmark orchestration.
//!
//! Several configs over the same target and observable are run as ensembles
//! and their error curves aligned on a shared nominal-cost grid (one unit per
//! partial-derivative evaluation, d per full gradient). An LMC curve is
//! sampled at iteration c/d where an RC-LMC curve is sampled at iteration c,
//! so methods are compared at equal gradient-component budgets.

use crate::config::{build_target, Method, RunConfig, ScheduleSpec};
use crate::sampler::{run_ensemble, EnsembleRecord};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("benchmark needs at least one config")]
    Empty,
    #[error("config {index} uses a different target; benchmarks share one target")]
    MixedTargets { index: usize },
    #[error("config {index} must use exactly one observable, shared across configs")]
    MixedObservables { index: usize },
    #[error(transparent)]
    Sampler(#[from] crate::sampler::SamplerError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveRow {
    pub m: u64,
    pub elapsed: f64,
    pub nominal_cost: u64,
    pub work_cost: f64,
    pub error: f64,
    pub stderr: f64,
}

/// One config's error series, row k aligned with cost grid entry k.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorCurve {
    pub label: String,
    pub config_hash: u64,
    pub rows: Vec<CurveRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkResult {
    pub observable: String,
    pub cost_grid: Vec<u64>,
    pub curves: Vec<ErrorCurve>,
}

pub fn method_label(config: &RunConfig) -> String {
    match config.method {
        Method::Lmc => "lmc".to_string(),
        Method::Rclmc => {
            let phi: String = config
                .phi_spec
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            format!("rclmc_{phi}")
        }
    }
}

/// Shared nominal-cost grid: 0, then geometric points from the largest
/// per-iteration cost up to the smallest total budget among the configs.
fn shared_cost_grid(configs: &[RunConfig], dim: usize, ratio: f64) -> Vec<u64> {
    let cost_max = configs
        .iter()
        .map(|c| c.iterations * c.method.cost_per_iteration(dim))
        .min()
        .unwrap_or(0);
    let cost_min =
        configs.iter().map(|c| c.method.cost_per_iteration(dim)).max().unwrap_or(1);
    let mut grid = vec![0, cost_max];
    let mut cur = cost_min as f64;
    while (cur as u64) < cost_max {
        grid.push(cur as u64);
        cur = (cur * ratio).max(cur + 1.0);
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}

fn curve_from_record(
    record: &EnsembleRecord,
    label: String,
    grid: &[u64],
    cost_per_iteration: u64,
    iterations_cap: u64,
) -> ErrorCurve {
    let rows = grid
        .iter()
        .map(|&cost| {
            let m = ((cost as f64 / cost_per_iteration as f64).round() as u64).min(iterations_cap);
            let snap = record
                .snapshots
                .iter()
                .min_by_key(|s| s.m.abs_diff(m))
                .expect("ensemble always has snapshots");
            let obs = &snap.observables[0];
            CurveRow {
                m: snap.m,
                elapsed: snap.elapsed_mean,
                nominal_cost: snap.nominal_cost,
                work_cost: snap.work_cost_mean,
                error: obs.error.unwrap_or(f64::NAN),
                stderr: obs.stderr,
            }
        })
        .collect();
    ErrorCurve { label, config_hash: record.config_hash, rows }
}

/// Run every config and align the error curves on the shared cost grid. All
/// configs must share the target and the single observable.
pub fn run_benchmark(configs: &[RunConfig]) -> Result<BenchmarkResult, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::Empty);
    }
    let first = &configs[0];
    if first.observables.len() != 1 {
        return Err(HarnessError::MixedObservables { index: 0 });
    }
    for (index, c) in configs.iter().enumerate().skip(1) {
        if c.target != first.target {
            return Err(HarnessError::MixedTargets { index });
        }
        if c.observables != first.observables {
            return Err(HarnessError::MixedObservables { index });
        }
    }
    let target = build_target(&first.target)?.model;
    let ratio = match first.snapshot_schedule {
        ScheduleSpec::Geometric(r) => r,
        ScheduleSpec::Explicit(_) => 1.3,
    };
    let grid = shared_cost_grid(configs, target.dim(), ratio);

    let mut curves = Vec::with_capacity(configs.len());
    for config in configs {
        let cpi = config.method.cost_per_iteration(target.dim());
        // Snapshot exactly at the iterations the grid asks for.
        let points: Vec<u64> = grid
            .iter()
            .map(|&c| ((c as f64 / cpi as f64).round() as u64).min(config.iterations))
            .collect();
        let mut aligned = config.clone();
        aligned.snapshot_schedule = ScheduleSpec::Explicit(points);
        let record = run_ensemble(&aligned, &target)?;
        curves.push(curve_from_record(&record, method_label(config), &grid, cpi, config.iterations));
    }
    Ok(BenchmarkResult { observable: first.observables[0].label(), cost_grid: grid, curves })
}

/// Matched-cost ordering statistics for a pair of curves: at how many grid
/// points past burn-in does `better` have error ≤ `worse` + 4·combined SE?
#[derive(Clone, Debug, Serialize)]
pub struct OrderingSummary {
    pub better: String,
    pub worse: String,
    pub satisfied: usize,
    pub total: usize,
}

impl OrderingSummary {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            return 1.0;
        }
        self.satisfied as f64 / self.total as f64
    }
}

/// Compare consecutive curve pairs (`curves[k]` expected no worse than
/// `curves[k+1]`) past the burn-in prefix of the cost axis.
pub fn ordering_at_matched_cost(
    result: &BenchmarkResult,
    burn_in_fraction: f64,
    sigmas: f64,
) -> Vec<OrderingSummary> {
    let cost_max = result.cost_grid.last().copied().unwrap_or(0) as f64;
    let threshold = burn_in_fraction * cost_max;
    let mut out = Vec::new();
    for pair in result.curves.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let mut satisfied = 0;
        let mut total = 0;
        for (k, &cost) in result.cost_grid.iter().enumerate() {
            if (cost as f64) < threshold || cost == 0 {
                continue;
            }
            let ra = &a.rows[k];
            let rb = &b.rows[k];
            let band = sigmas * (ra.stderr * ra.stderr + rb.stderr * rb.stderr).sqrt();
            total += 1;
            if ra.error <= rb.error + band {
                satisfied += 1;
            }
        }
        out.push(OrderingSummary {
            better: a.label.clone(),
            worse: b.label.clone(),
            satisfied,
            total,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{build_target, InitSpec, MeanSpec, ObservableSpec, TargetSpec};

    fn config(method: Method, m: u64) -> RunConfig {
        RunConfig {
            method,
            target: TargetSpec::Product { lambdas: vec![1.0, 2.0] },
            phi_spec: "uniform".into(),
            h: 0.005,
            iterations: m,
            chains: 64,
            master_seed: 7,
            init: InitSpec::Normal { mean: MeanSpec::Scalar(1.0), scale: 1.0 },
            observables: vec![ObservableSpec::second_moment()],
            snapshot_schedule: ScheduleSpec::Geometric(1.6),
        }
    }

    #[test]
    fn single_config_matches_sample_series() {
        let cfg = config(Method::Rclmc, 200);
        let target = build_target(&cfg.target).unwrap().model;
        let result = run_benchmark(std::slice::from_ref(&cfg)).unwrap();
        assert_eq!(result.curves.len(), 1);
        // Every row reproduces the plain ensemble's error at that iteration.
        let mut aligned = cfg.clone();
        aligned.snapshot_schedule = ScheduleSpec::Explicit(
            result.curves[0].rows.iter().map(|r| r.m).collect(),
        );
        let record = run_ensemble(&aligned, &target).unwrap();
        for row in &result.curves[0].rows {
            let snap = record.snapshots.iter().find(|s| s.m == row.m).unwrap();
            assert_eq!(row.error, snap.observables[0].error.unwrap());
        }
    }

    #[test]
    fn grid_is_strictly_increasing_and_budgeted() {
        let lmc = config(Method::Lmc, 100); // cost 200
        let rc = config(Method::Rclmc, 500); // cost 500
        let result = run_benchmark(&[lmc, rc]).unwrap();
        for w in result.cost_grid.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert_eq!(*result.cost_grid.last().unwrap(), 200);
        assert_eq!(result.curves.len(), 2);
        for c in &result.curves {
            assert_eq!(c.rows.len(), result.cost_grid.len());
        }
    }

    #[test]
    fn rejects_mixed_targets_and_observables() {
        let a = config(Method::Rclmc, 100);
        let mut b = config(Method::Rclmc, 100);
        b.target = TargetSpec::Product { lambdas: vec![1.0, 3.0] };
        assert!(matches!(
            run_benchmark(&[a.clone(), b]),
            Err(HarnessError::MixedTargets { index: 1 })
        ));
        let mut c = config(Method::Rclmc, 100);
        c.observables = vec![ObservableSpec::Plain("mean".into())];
        assert!(matches!(
            run_benchmark(&[a, c]),
            Err(HarnessError::MixedObservables { index: 1 })
        ));
    }

    #[test]
    fn ordering_summary_counts() {
        let mk = |label: &str, errors: &[f64]| ErrorCurve {
            label: label.into(),
            config_hash: 0,
            rows: errors
                .iter()
                .map(|&e| CurveRow {
                    m: 0,
                    elapsed: 0.0,
                    nominal_cost: 0,
                    work_cost: 0.0,
                    error: e,
                    stderr: 0.01,
                })
                .collect(),
        };
        let result = BenchmarkResult {
            observable: "second_moment".into(),
            cost_grid: vec![0, 10, 20, 40, 80, 100],
            curves: vec![mk("fast", &[9.0, 5.0, 1.0, 0.5, 0.30, 0.2]), mk(
                "slow",
                &[9.0, 6.0, 2.0, 1.0, 0.25, 0.4],
            )],
        };
        let orderings = ordering_at_matched_cost(&result, 0.2, 4.0);
        assert_eq!(orderings.len(), 1);
        // Points past burn-in (cost ≥ 20): costs 20, 40, 80, 100. At 80 the
        // "fast" curve is worse by 0.05 but the 4σ band (~0.057) covers it.
        assert_eq!(orderings[0].total, 4);
        assert_eq!(orderings[0].satisfied, 4);
        let strict = ordering_at_matched_cost(&result, 0.2, 1.0);
        assert_eq!(strict[0].satisfied, 3);
    }
}
