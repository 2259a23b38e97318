//! Built-in statistical verification suites.
//!
//! Each suite runs a fixed desk-scale experiment with a baked-in seed and
//! checks a theoretical statement against the measured ensemble at 4-standard-
//! error resolution:
//!
//! * `recursion` — the exact second-moment recursion
//!   E|x^{m+1}|² = (1−2h+dh²)·E|x^m|² + 2dh on the standard Gaussian target;
//! * `contraction` — the one-step coupling inequality
//!   E|Δ^{m+1}|² ≤ (1−hμ/2)·E|Δ^m|² + (10h²/μ)·Σ L_i²/φ_i against the exactly
//!   integrated reference chain;
//! * `stationarity` — chains started at the target stay there: coordinate
//!   means near zero, second moment tracking the recursion toward its biased
//!   fixed point;
//! * `lowerbound` — E|x^m|² ≥ d(1−2h)^m + 2d/(2−dh) for the shifted
//!   over-dispersed start, plus the analytic floor
//!   √(2d/(2−dh)) − √d ≥ d^{3/2}h/6;
//! * `bounds-dominance` — the measured moment lower bound on W never exceeds
//!   the Lipschitz-Hessian upper bound.

use crate::bounds::{moment_recursion, rclmc_bound_case2};
use crate::config::{InitSpec, MeanSpec, Method, ObservableSpec, RunConfig, ScheduleSpec, TargetSpec};
use crate::diagnostics::{gaussian_w2, moment_lower_bound_w2};
use crate::linalg::SquareMat;
use crate::rng::RngState;
use crate::sampler::{coupled_pair_step, rc_lmc_step, run_ensemble, ChainState, CoupledPair};
use crate::schedule::phi_uniform;
use crate::targets::{make_product_target, TargetModel};
use rayon::prelude::*;
use serde::Serialize;

pub const SUITE_NAMES: [&str; 5] =
    ["recursion", "contraction", "stationarity", "lowerbound", "bounds-dominance"];

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub label: String,
    pub passed: bool,
    pub observed: f64,
    pub limit: f64,
}

impl CheckResult {
    fn upper(label: String, observed: f64, limit: f64) -> Self {
        CheckResult { label, passed: observed <= limit, observed, limit }
    }

    fn lower(label: String, observed: f64, limit: f64) -> Self {
        CheckResult { label, passed: observed >= limit, observed, limit }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    fn new(suite: &str, checks: Vec<CheckResult>) -> Self {
        SuiteReport { suite: suite.into(), passed: checks.iter().all(|c| c.passed), checks }
    }
}

/// Run a suite by name; `None` for an unknown suite.
pub fn run_suite(name: &str) -> Option<SuiteReport> {
    match name {
        "recursion" => Some(suite_recursion()),
        "contraction" => Some(suite_contraction()),
        "stationarity" => Some(suite_stationarity()),
        "lowerbound" => Some(suite_lowerbound()),
        "bounds-dominance" => Some(suite_bounds_dominance()),
        _ => None,
    }
}

fn standard_gaussian_config(d: usize, h: f64, m: u64, n: u64, seed: u64) -> RunConfig {
    RunConfig {
        method: Method::Rclmc,
        target: TargetSpec::Product { lambdas: vec![1.0; d] },
        phi_spec: "uniform".into(),
        h,
        iterations: m,
        chains: n,
        master_seed: seed,
        init: InitSpec::Normal { mean: MeanSpec::Scalar(0.0), scale: 1.0 },
        observables: vec![ObservableSpec::second_moment()],
        snapshot_schedule: ScheduleSpec::Geometric(1.3),
    }
}

/// Empirical E|x^m|² vs the closed-form recursion at every snapshot.
pub fn suite_recursion() -> SuiteReport {
    let (d, h, m, n) = (50usize, 1e-3, 1000u64, 10_000u64);
    let config = standard_gaussian_config(d, h, m, n, 0x5245_4331);
    let target = crate::config::build_target(&config.target).unwrap().model;
    let record = run_ensemble(&config, &target).unwrap();
    let mut checks = Vec::new();
    for snap in &record.snapshots {
        let expected = moment_recursion(d, h, snap.m, d as f64).unwrap();
        let observed = (snap.moments.second_moment - expected).abs();
        let limit = 4.0 * snap.moments.second_moment_se;
        checks.push(CheckResult::upper(
            format!("recursion m={} (expected {expected:.4})", snap.m),
            observed,
            limit,
        ));
    }
    SuiteReport::new("recursion", checks)
}

/// The diagonal target diag(1,2,3,4) used by the coupling experiments; μ = 1.
fn contraction_target() -> (TargetModel, Vec<f64>) {
    let lambdas = vec![1.0, 2.0, 3.0, 4.0];
    (make_product_target(&lambdas).unwrap(), lambdas)
}

/// Per-step means and standard errors of
/// Y_m = |Δ^{m+1}|² − (1−hμ/2)|Δ^m|² over coupled pairs.
fn coupled_step_stats(
    target: &TargetModel,
    lambdas: &[f64],
    h: f64,
    n_pairs: u64,
    steps: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let d = target.dim();
    let dist = phi_uniform(d, h).unwrap();
    let contraction = 1.0 - h * target.mu() / 2.0;
    const BLOCK: u64 = 64;
    let n_blocks = n_pairs.div_ceil(BLOCK);

    let block_sums: Vec<(Vec<f64>, Vec<f64>)> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let lo = block * BLOCK;
            let hi = (lo + BLOCK).min(n_pairs);
            let mut sum = vec![0.0; steps];
            let mut sum2 = vec![0.0; steps];
            for pair_idx in lo..hi {
                let mut rng = RngState::from_master(seed, pair_idx);
                // Comonotone start: euler from N(0, I), reference exactly at
                // the target N(0, Λ⁻¹), sharing the same draw.
                let z: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
                let x_exact: Vec<f64> =
                    z.iter().zip(lambdas).map(|(zi, l)| zi / l.sqrt()).collect();
                let euler = ChainState::new(z, rng);
                let exact =
                    ChainState::new(x_exact, RngState::from_master(seed, n_pairs + pair_idx));
                let mut pair = CoupledPair::new(target, euler, exact).unwrap();
                for s in 0..steps {
                    let before = pair.squared_distance();
                    coupled_pair_step(&mut pair, &dist);
                    let after = pair.squared_distance();
                    let y = after - contraction * before;
                    sum[s] += y;
                    sum2[s] += y * y;
                }
            }
            (sum, sum2)
        })
        .collect();

    let mut sum = vec![0.0; steps];
    let mut sum2 = vec![0.0; steps];
    for (bs, bs2) in &block_sums {
        for s in 0..steps {
            sum[s] += bs[s];
            sum2[s] += bs2[s];
        }
    }
    let nf = n_pairs as f64;
    (0..steps)
        .map(|s| {
            let mean = sum[s] / nf;
            let var = (sum2[s] / nf - mean * mean).max(0.0);
            (mean, (var / nf).sqrt())
        })
        .collect()
}

/// One-step contraction inequality against the exact reference chain.
pub fn suite_contraction() -> SuiteReport {
    let (target, lambdas) = contraction_target();
    let h = 1.0 / 512.0; // = μ·minφ/(8L²) for uniform φ on diag(1..4)
    let n_pairs = 10_000u64;
    let steps = 500usize;
    let dist = phi_uniform(target.dim(), h).unwrap();
    let budget: f64 = 10.0 * h * h / target.mu()
        * lambdas.iter().zip(dist.probs()).map(|(l, p)| l * l / p).sum::<f64>();
    let stats = coupled_step_stats(&target, &lambdas, h, n_pairs, steps, 0x434f_5550);
    let checks = stats
        .iter()
        .enumerate()
        .map(|(m, &(mean, se))| {
            CheckResult::upper(format!("contraction step m={m}"), mean, budget + 4.0 * se)
        })
        .collect();
    SuiteReport::new("contraction", checks)
}

/// Chains initialized at the target stay there.
pub fn suite_stationarity() -> SuiteReport {
    let (d, h, m, n) = (50usize, 1e-3, 1000u64, 10_000u64);
    let config = standard_gaussian_config(d, h, m, n, 0x5354_4154);
    let target = crate::config::build_target(&config.target).unwrap().model;
    let record = run_ensemble(&config, &target).unwrap();
    let mut checks = Vec::new();
    for snap in &record.snapshots {
        let mut worst = 0.0_f64;
        for i in 0..d {
            let z = snap.moments.mean[i].abs() / snap.moments.mean_se[i].max(1e-300);
            worst = worst.max(z);
        }
        checks.push(CheckResult::upper(
            format!("coordinate means m={} (max |z|)", snap.m),
            worst,
            4.0,
        ));
        let expected = moment_recursion(d, h, snap.m, d as f64).unwrap();
        checks.push(CheckResult::upper(
            format!("second moment m={} tracks recursion", snap.m),
            (snap.moments.second_moment - expected).abs(),
            4.0 * snap.moments.second_moment_se,
        ));
    }
    SuiteReport::new("stationarity", checks)
}

/// Second-moment lower bound chain for the shifted over-dispersed start.
pub fn suite_lowerbound() -> SuiteReport {
    let (d, h, m, n) = (100usize, 5e-3, 2000u64, 10_000u64);
    let mut config = standard_gaussian_config(d, h, m, n, 0x4c4f_5742);
    // q0 = N(e, 2I): E|x⁰|² = 3d.
    config.init = InitSpec::Normal { mean: MeanSpec::Scalar(1.0), scale: 2.0_f64.sqrt() };
    let target = crate::config::build_target(&config.target).unwrap().model;
    let record = run_ensemble(&config, &target).unwrap();
    let mut checks = Vec::new();
    let d_f = d as f64;
    for snap in &record.snapshots {
        if snap.m == 0 {
            checks.push(CheckResult::upper(
                "initial second moment is 3d".into(),
                (snap.moments.second_moment - 3.0 * d_f).abs(),
                4.0 * snap.moments.second_moment_se,
            ));
            continue;
        }
        let floor = d_f * (1.0 - 2.0 * h).powf(snap.m as f64) + 2.0 * d_f / (2.0 - d_f * h);
        checks.push(CheckResult::lower(
            format!("moment floor m={}", snap.m),
            snap.moments.second_moment,
            floor - 4.0 * snap.moments.second_moment_se,
        ));
    }
    // Analytic part: √(2d/(2−dh)) − √d ≥ d^{3/2}h/6 on a (d, dh) grid.
    let mut min_margin = f64::INFINITY;
    for dg in [1usize, 2, 5, 10, 50, 100, 400] {
        for k in 1..=20 {
            let dh = k as f64 / 20.0;
            let hg = dh / dg as f64;
            let lhs = (2.0 * dg as f64 / (2.0 - dh)).sqrt() - (dg as f64).sqrt();
            let rhs = (dg as f64).powf(1.5) * hg / 6.0;
            min_margin = min_margin.min(lhs - rhs);
        }
    }
    checks.push(CheckResult::lower(
        "analytic fixed-point floor over (d, dh) grid".into(),
        min_margin,
        -1e-12,
    ));
    SuiteReport::new("lowerbound", checks)
}

/// Measured moment lower bound vs the Lipschitz-Hessian upper bound.
pub fn suite_bounds_dominance() -> SuiteReport {
    let (target, lambdas) = contraction_target();
    let d = target.dim();
    let h_adm = 1.0 / 512.0;
    let target_second_moment: f64 = lambdas.iter().map(|l| 1.0 / l).sum();
    // W0 between the N(0, I) start and the target N(0, Λ⁻¹).
    let w0 = gaussian_w2(
        &vec![0.0; d],
        &SquareMat::identity(d),
        &vec![0.0; d],
        &SquareMat::diagonal(&lambdas.iter().map(|l| 1.0 / l).collect::<Vec<_>>()),
    )
    .unwrap();
    let phi = vec![1.0 / d as f64; d];
    let hess = vec![0.0; d];

    let mut checks = Vec::new();
    for (tag, h) in [("admissible", h_adm), ("admissible/4", h_adm / 4.0)] {
        let config = RunConfig {
            method: Method::Rclmc,
            target: TargetSpec::Product { lambdas: lambdas.clone() },
            phi_spec: "uniform".into(),
            h,
            iterations: 4000,
            chains: 10_000,
            master_seed: 0x444f_4d31,
            init: InitSpec::Normal { mean: MeanSpec::Scalar(0.0), scale: 1.0 },
            observables: vec![ObservableSpec::second_moment()],
            snapshot_schedule: ScheduleSpec::Geometric(1.5),
        };
        let record = run_ensemble(&config, &target).unwrap();
        for snap in &record.snapshots {
            let report = rclmc_bound_case2(
                w0,
                target.mu(),
                target.lips_global(),
                &lambdas,
                &hess,
                &phi,
                h,
                snap.m,
            )
            .unwrap();
            assert!(report.admissible);
            let lower =
                moment_lower_bound_w2(snap.moments.second_moment, target_second_moment);
            // Delta method: se(√E) = se(E)/(2√E).
            let se = snap.moments.second_moment_se
                / (2.0 * snap.moments.second_moment.sqrt().max(1e-300));
            checks.push(CheckResult::upper(
                format!("dominance h={tag} m={}", snap.m),
                lower,
                report.bound + 4.0 * se,
            ));
        }
    }
    SuiteReport::new("bounds-dominance", checks)
}

/// Per-chain tail averages of |x^m|² for the biased-fixed-point experiment:
/// chains of RC-LMC on the standard Gaussian target, averaging snapshots
/// `tail_start, tail_start+stride, …, m_total`. Returns (mean, standard
/// error) over chains.
pub fn tail_average_second_moment(
    d: usize,
    h: f64,
    n_chains: u64,
    m_total: u64,
    tail_start: u64,
    stride: u64,
    seed: u64,
) -> (f64, f64) {
    let target = make_product_target(&vec![1.0; d]).unwrap();
    let dist = phi_uniform(d, h).unwrap();
    const BLOCK: u64 = 64;
    let n_blocks = n_chains.div_ceil(BLOCK);
    let sums: Vec<(f64, f64)> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let lo = block * BLOCK;
            let hi = (lo + BLOCK).min(n_chains);
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for chain in lo..hi {
                let mut rng = RngState::from_master(seed, chain);
                let x: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
                let mut state = ChainState::new(x, rng);
                let mut acc = 0.0;
                let mut count = 0u64;
                while state.m < m_total {
                    rc_lmc_step(&mut state, &target, &dist);
                    if state.m >= tail_start && (state.m - tail_start).is_multiple_of(stride) {
                        acc += state.x.iter().map(|v| v * v).sum::<f64>();
                        count += 1;
                    }
                }
                let v = acc / count as f64;
                sum += v;
                sum2 += v * v;
            }
            (sum, sum2)
        })
        .collect();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for (s, s2) in sums {
        sum += s;
        sum2 += s2;
    }
    let nf = n_chains as f64;
    let mean = sum / nf;
    let var = (sum2 / nf - mean * mean).max(0.0);
    (mean, (var / nf).sqrt())
}

/// The three §-benchmark configs compared at matched cost: classical LMC,
/// RC-LMC with uniform probabilities, RC-LMC with φ_i ∝ L_i.
pub fn figure1_configs(
    target_seed: u64,
    master_seed: u64,
    n_chains: u64,
    h: f64,
    rc_iterations: u64,
) -> Vec<RunConfig> {
    let target = TargetSpec::Section5 { seed: target_seed };
    // Start the block coordinates shifted by e and the rest at the target.
    let mut mean = vec![0.0; crate::targets::SECTION5_DIM];
    for m in mean.iter_mut().take(crate::targets::SECTION5_BLOCK) {
        *m = 1.0;
    }
    let init = InitSpec::Normal { mean: MeanSpec::Vector(mean), scale: 1.0 };
    let observables = vec![ObservableSpec::psi_spectral(crate::targets::SECTION5_BLOCK)];
    let d = crate::targets::SECTION5_DIM as u64;
    let base = RunConfig {
        method: Method::Rclmc,
        target,
        phi_spec: "alpha:1".into(),
        h,
        iterations: rc_iterations,
        chains: n_chains,
        master_seed,
        init,
        observables,
        snapshot_schedule: ScheduleSpec::Geometric(1.3),
    };
    let mut alpha0 = base.clone();
    alpha0.phi_spec = "alpha:0".into();
    let mut lmc = base.clone();
    lmc.method = Method::Lmc;
    lmc.phi_spec = "uniform".into();
    lmc.iterations = rc_iterations.div_ceil(d);
    vec![base, alpha0, lmc]
}
