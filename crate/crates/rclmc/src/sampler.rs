//! Chain transitions and the deterministic parallel ensemble runner.
//!
//! One RC-LMC step draws a coordinate r ~ Φ and ξ ~ N(0,1), then updates
//!
//! ```text
//! x_r ← x_r − h_r ∂_r f(x) + √(2 h_r) ξ,    h_r = h/φ_r,
//! ```
//!
//! leaving every other coordinate bit-identical. One classical LMC step updates
//! all coordinates with the full gradient. Each step advances the elapsed-time
//! clock T by the drawn step size and charges the nominal cost ledger one unit
//! per partial derivative (d units for a full gradient) plus the per-partial
//! work units of the target.
//!
//! The noise consumption pattern is fixed: one coordinate draw plus one normal
//! per RC-LMC step, d normals per LMC step, one coordinate draw plus two
//! normals per coupled step. Together with per-chain generator streams this
//! makes every ensemble a pure function of `(master_seed, chain index,
//! config)` — worker count and scheduling never change the output.

use crate::config::{InitSpec, Method, ObservableSpec, RunConfig};
use crate::diagnostics::MomentSummary;
use crate::rng::RngState;
use crate::schedule::CoordinateDistribution;
use crate::targets::TargetModel;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("coupled reference chain requires a diagonal Gaussian target")]
    NonDiagonalTarget,
    #[error("distribution dimension {dist} does not match target dimension {target}")]
    DimensionMismatch { dist: usize, target: usize },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

/// State of one chain: iterate, iteration count, elapsed time T^m = Σ h_{r^n},
/// cost ledgers, and the chain's private generator.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub m: u64,
    pub elapsed: f64,
    /// One unit per partial-derivative evaluation; d per full gradient.
    pub nominal_cost: u64,
    /// Work units from the target's per-partial cost table.
    pub work_cost: u64,
    pub rng: RngState,
    /// Poisoned marker; once set, steps become no-ops.
    pub diverged: bool,
}

impl ChainState {
    pub fn new(x: Vec<f64>, rng: RngState) -> Self {
        ChainState { x, m: 0, elapsed: 0.0, nominal_cost: 0, work_cost: 0, rng, diverged: false }
    }
}

/// One RC-LMC transition; returns the updated coordinate, or `None` for a
/// poisoned chain.
pub fn rc_lmc_step(
    state: &mut ChainState,
    target: &TargetModel,
    dist: &CoordinateDistribution,
) -> Option<usize> {
    if state.diverged {
        return None;
    }
    let r = dist.sample_index(&mut state.rng);
    let xi = state.rng.standard_normal();
    rc_lmc_step_forced(state, target, dist, r, xi)
}

/// RC-LMC transition with the coordinate and noise supplied by the caller
/// (used by tests and trajectory replays; consumes no randomness).
pub fn rc_lmc_step_forced(
    state: &mut ChainState,
    target: &TargetModel,
    dist: &CoordinateDistribution,
    r: usize,
    xi: f64,
) -> Option<usize> {
    if state.diverged {
        return None;
    }
    let h_r = dist.step(r);
    let grad_r = target.partial(r, &state.x);
    let next = state.x[r] - h_r * grad_r + (2.0 * h_r).sqrt() * xi;
    if !grad_r.is_finite() || !next.is_finite() {
        state.diverged = true;
        return None;
    }
    state.x[r] = next;
    state.m += 1;
    state.elapsed += h_r;
    state.nominal_cost += 1;
    state.work_cost += target.partial_cost_units(r);
    Some(r)
}

/// One classical LMC transition: x ← x − h ∇f(x) + √(2h) ξ_d.
pub fn lmc_step(state: &mut ChainState, target: &TargetModel, h: f64) {
    if state.diverged {
        return;
    }
    let d = target.dim();
    let mut grad = vec![0.0; d];
    target.gradient_into(&state.x, &mut grad);
    let mut xi = vec![0.0; d];
    state.rng.fill_standard_normal(&mut xi);
    lmc_step_forced(state, target, h, &grad, &xi);
}

/// LMC transition from a precomputed gradient and noise vector.
pub fn lmc_step_forced(state: &mut ChainState, target: &TargetModel, h: f64, grad: &[f64], xi: &[f64]) {
    if state.diverged {
        return;
    }
    debug_assert!(h > 0.0);
    let d = target.dim();
    let scale = (2.0 * h).sqrt();
    let mut ok = true;
    for g in grad {
        if !g.is_finite() {
            ok = false;
        }
    }
    if ok {
        for i in 0..d {
            let next = state.x[i] - h * grad[i] + scale * xi[i];
            if !next.is_finite() {
                ok = false;
                break;
            }
            state.x[i] = next;
        }
    }
    if !ok {
        state.diverged = true;
        return;
    }
    state.m += 1;
    state.elapsed += h;
    state.nominal_cost += d as u64;
    state.work_cost += target.gradient_cost_units();
}

/// Joint law of the Brownian increment B_h and the Ornstein–Uhlenbeck
/// stochastic integral I_h = ∫₀ʰ e^{−λ(h−s)} dB_s:
///
/// ```text
/// Var(B_h) = h,   Var(I_h) = (1 − e^{−2λh})/(2λ),   Cov(B_h, I_h) = (1 − e^{−λh})/λ.
/// ```
///
/// Returns `(var_b, var_i, cov)`.
pub fn ou_coupling_moments(lambda: f64, h: f64) -> (f64, f64, f64) {
    debug_assert!(lambda > 0.0 && h > 0.0);
    let var_i = -(-2.0 * lambda * h).exp_m1() / (2.0 * lambda);
    let cov = -(-lambda * h).exp_m1() / lambda;
    (h, var_i, cov)
}

/// An RC-LMC chain coupled to the exactly integrated coordinate-frozen
/// reference dynamics on a diagonal Gaussian target.
///
/// Both chains share the coordinate draw and the Brownian path of each step.
/// The Euler chain takes the RC-LMC update with noise √2·B_h; the reference
/// chain takes the exact Ornstein–Uhlenbeck step
///
/// ```text
/// x̃_r ← b_r + e^{−λ_r h_r} (x̃_r − b_r) + √2·I_h,
/// ```
///
/// so a reference chain initialized from the target stays exactly
/// target-distributed at every step. All randomness is drawn from the Euler
/// chain's generator; the reference chain's generator is untouched.
#[derive(Clone, Debug)]
pub struct CoupledPair {
    pub euler: ChainState,
    pub exact: ChainState,
    lambdas: Vec<f64>,
    mean: Vec<f64>,
}

impl CoupledPair {
    pub fn new(
        target: &TargetModel,
        euler: ChainState,
        exact: ChainState,
    ) -> Result<Self, SamplerError> {
        let lambdas = target.diagonal_precision().ok_or(SamplerError::NonDiagonalTarget)?;
        let mean = target.gaussian_mean();
        Ok(CoupledPair { euler, exact, lambdas, mean })
    }

    /// Squared distance |x − x̃|² between the chains.
    pub fn squared_distance(&self) -> f64 {
        self.euler
            .x
            .iter()
            .zip(&self.exact.x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Advance both chains of a coupled pair by one shared-randomness step.
/// Consumes one coordinate draw and exactly two normal variates.
pub fn coupled_pair_step(pair: &mut CoupledPair, dist: &CoordinateDistribution) -> usize {
    let r = dist.sample_index(&mut pair.euler.rng);
    let z1 = pair.euler.rng.standard_normal();
    let z2 = pair.euler.rng.standard_normal();
    let h_r = dist.step(r);
    let lambda = pair.lambdas[r];
    let b = pair.mean[r];
    let (var_b, var_i, cov) = ou_coupling_moments(lambda, h_r);

    // Correlated (B_h, I_h) by 2x2 Cholesky of the joint covariance.
    let b_inc = var_b.sqrt() * z1;
    let residual = (var_i - cov * cov / var_b).max(0.0).sqrt();
    let i_inc = (cov / var_b.sqrt()) * z1 + residual * z2;

    let sqrt2 = std::f64::consts::SQRT_2;
    let e = &mut pair.euler;
    e.x[r] = e.x[r] - h_r * lambda * (e.x[r] - b) + sqrt2 * b_inc;
    e.m += 1;
    e.elapsed += h_r;
    e.nominal_cost += 1;
    e.work_cost += 1;

    let t = &mut pair.exact;
    t.x[r] = b + (-lambda * h_r).exp() * (t.x[r] - b) + sqrt2 * i_inc;
    t.m += 1;
    t.elapsed += h_r;
    t.nominal_cost += 1;
    t.work_cost += 1;
    r
}

/// Per-observable statistics at one snapshot.
#[derive(Clone, Debug)]
pub struct ObservableStat {
    pub label: String,
    pub mean: f64,
    pub stderr: f64,
    pub reference: Option<f64>,
    /// |mean − reference| when a reference is known.
    pub error: Option<f64>,
}

/// Ensemble statistics recorded at one snapshot iteration.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub m: u64,
    /// Chains included (not yet diverged).
    pub included: u64,
    pub elapsed_mean: f64,
    pub nominal_cost: u64,
    pub work_cost_mean: f64,
    pub moments: MomentSummary,
    pub observables: Vec<ObservableStat>,
}

/// Raw per-chain states, chain-major within each snapshot.
#[derive(Clone, Debug)]
pub struct RawStates {
    pub dim: usize,
    pub chains: u64,
    pub states: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct EnsembleRecord {
    pub dim: usize,
    pub chains: u64,
    pub method: Method,
    pub config_hash: u64,
    pub snapshots: Vec<Snapshot>,
    pub diverged_chains: u64,
    pub raw: Option<RawStates>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Retain raw chain states at every snapshot (memory: snapshots × N × d).
    pub capture_states: bool,
}

/// Chains per work block. Aggregation runs block-by-block in index order, so
/// results are independent of how rayon schedules the blocks.
const BLOCK: u64 = 64;

struct SnapshotAcc {
    included: u64,
    sum_elapsed: f64,
    sum_work: f64,
    sum_x: Vec<f64>,
    sum_x2: Vec<f64>,
    sum_x4: Vec<f64>,
    sum_abs2: f64,
    sum_abs4: f64,
    obs_sum: Vec<f64>,
    obs_sum2: Vec<f64>,
}

impl SnapshotAcc {
    fn new(dim: usize, n_obs: usize) -> Self {
        SnapshotAcc {
            included: 0,
            sum_elapsed: 0.0,
            sum_work: 0.0,
            sum_x: vec![0.0; dim],
            sum_x2: vec![0.0; dim],
            sum_x4: vec![0.0; dim],
            sum_abs2: 0.0,
            sum_abs4: 0.0,
            obs_sum: vec![0.0; n_obs],
            obs_sum2: vec![0.0; n_obs],
        }
    }

    fn record(&mut self, state: &ChainState, observables: &[ObservableSpec]) {
        self.included += 1;
        self.sum_elapsed += state.elapsed;
        self.sum_work += state.work_cost as f64;
        let mut abs2 = 0.0;
        for (i, &v) in state.x.iter().enumerate() {
            self.sum_x[i] += v;
            self.sum_x2[i] += v * v;
            self.sum_x4[i] += v * v * v * v;
            abs2 += v * v;
        }
        self.sum_abs2 += abs2;
        self.sum_abs4 += abs2 * abs2;
        for (k, obs) in observables.iter().enumerate() {
            let val = obs.evaluate(&state.x);
            self.obs_sum[k] += val;
            self.obs_sum2[k] += val * val;
        }
    }

    fn merge(&mut self, other: &SnapshotAcc) {
        self.included += other.included;
        self.sum_elapsed += other.sum_elapsed;
        self.sum_work += other.sum_work;
        for i in 0..self.sum_x.len() {
            self.sum_x[i] += other.sum_x[i];
            self.sum_x2[i] += other.sum_x2[i];
            self.sum_x4[i] += other.sum_x4[i];
        }
        self.sum_abs2 += other.sum_abs2;
        self.sum_abs4 += other.sum_abs4;
        for k in 0..self.obs_sum.len() {
            self.obs_sum[k] += other.obs_sum[k];
            self.obs_sum2[k] += other.obs_sum2[k];
        }
    }
}

struct BlockResult {
    accs: Vec<SnapshotAcc>,
    diverged: u64,
    raw: Option<Vec<Vec<f64>>>,
}

fn draw_init(init: &InitSpec, dim: usize, rng: &mut RngState) -> Vec<f64> {
    match init {
        InitSpec::Point(v) => v.clone(),
        InitSpec::Normal { mean, scale } => {
            (0..dim).map(|i| mean.component(i) + scale * rng.standard_normal()).collect()
        }
    }
}

pub fn run_ensemble(
    config: &RunConfig,
    target: &TargetModel,
) -> Result<EnsembleRecord, SamplerError> {
    run_ensemble_with(config, target, RunOptions::default())
}

pub fn run_ensemble_with(
    config: &RunConfig,
    target: &TargetModel,
    options: RunOptions,
) -> Result<EnsembleRecord, SamplerError> {
    config.validate(target)?;
    let dim = target.dim();
    let dist = config.build_distribution(target)?;
    if dist.dim() != dim {
        return Err(SamplerError::DimensionMismatch { dist: dist.dim(), target: dim });
    }
    let schedule = config.snapshot_points()?;
    let observables = &config.observables;
    let n_obs = observables.len();
    let n_chains = config.chains;
    let n_blocks = n_chains.div_ceil(BLOCK);

    let blocks: Vec<BlockResult> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let chain_lo = block * BLOCK;
            let chain_hi = (chain_lo + BLOCK).min(n_chains);
            let mut accs: Vec<SnapshotAcc> =
                schedule.iter().map(|_| SnapshotAcc::new(dim, n_obs)).collect();
            let mut raw = if options.capture_states {
                Some(vec![
                    Vec::with_capacity(((chain_hi - chain_lo) as usize) * dim);
                    schedule.len()
                ])
            } else {
                None
            };
            let mut diverged = 0u64;
            for chain in chain_lo..chain_hi {
                let mut rng = RngState::from_master(config.master_seed, chain);
                let x = draw_init(&config.init, dim, &mut rng);
                let mut state = ChainState::new(x, rng);
                for (slot, &m_snap) in schedule.iter().enumerate() {
                    while state.m < m_snap && !state.diverged {
                        match config.method {
                            Method::Rclmc => {
                                rc_lmc_step(&mut state, target, &dist);
                            }
                            Method::Lmc => lmc_step(&mut state, target, config.h),
                        }
                    }
                    if !state.diverged {
                        accs[slot].record(&state, observables);
                    }
                    if let Some(raw) = raw.as_mut() {
                        raw[slot].extend_from_slice(&state.x);
                    }
                }
                if state.diverged {
                    diverged += 1;
                }
            }
            BlockResult { accs, diverged, raw }
        })
        .collect();

    // Deterministic reduction in block order.
    let mut totals: Vec<SnapshotAcc> =
        schedule.iter().map(|_| SnapshotAcc::new(dim, n_obs)).collect();
    let mut diverged_chains = 0u64;
    let mut raw = options.capture_states.then(|| RawStates {
        dim,
        chains: n_chains,
        states: vec![Vec::with_capacity((n_chains as usize) * dim); schedule.len()],
    });
    for block in &blocks {
        for (total, acc) in totals.iter_mut().zip(&block.accs) {
            total.merge(acc);
        }
        diverged_chains += block.diverged;
        if let (Some(raw), Some(block_raw)) = (raw.as_mut(), block.raw.as_ref()) {
            for (dst, src) in raw.states.iter_mut().zip(block_raw) {
                dst.extend_from_slice(src);
            }
        }
    }

    let references: Vec<Option<f64>> =
        observables.iter().map(|obs| obs.reference(target).ok()).collect();
    let snapshots: Vec<Snapshot> = schedule
        .iter()
        .zip(&totals)
        .map(|(&m, acc)| {
            let n = acc.included.max(1) as f64;
            let moments = MomentSummary::from_sums(
                acc.included,
                &acc.sum_x,
                &acc.sum_x2,
                &acc.sum_x4,
                acc.sum_abs2,
                acc.sum_abs4,
            );
            let observables = observables
                .iter()
                .enumerate()
                .map(|(k, obs)| {
                    let mean = acc.obs_sum[k] / n;
                    let var = (acc.obs_sum2[k] / n - mean * mean).max(0.0);
                    // Sample (n-1) normalization for the CLT band.
                    let var = if acc.included > 1 { var * n / (n - 1.0) } else { var };
                    let stderr = (var / n).sqrt();
                    let reference = references[k];
                    ObservableStat {
                        label: obs.label(),
                        mean,
                        stderr,
                        reference,
                        error: reference.map(|r| (mean - r).abs()),
                    }
                })
                .collect();
            Snapshot {
                m,
                included: acc.included,
                elapsed_mean: acc.sum_elapsed / n,
                nominal_cost: m * config.method.cost_per_iteration(dim),
                work_cost_mean: acc.sum_work / n,
                moments,
                observables,
            }
        })
        .collect();

    Ok(EnsembleRecord {
        dim,
        chains: n_chains,
        method: config.method,
        config_hash: config.hash(),
        snapshots,
        diverged_chains,
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{MeanSpec, ScheduleSpec, TargetSpec};
    use crate::schedule::{phi_explicit, phi_uniform};
    use crate::targets::{make_gaussian_target, make_product_target, QuadraticSpec};
    use crate::linalg::SquareMat;

    fn standard_target(d: usize) -> TargetModel {
        make_gaussian_target(&QuadraticSpec {
            precision: SquareMat::identity(d),
            mean: vec![0.0; d],
        })
        .unwrap()
    }

    #[test]
    fn rc_step_forced_drift_only() {
        // f = |x|^2/2, x = (1,1), r = 0, xi = 0, h_0 = 0.1 -> x = (0.9, 1).
        let target = standard_target(2);
        let dist = phi_explicit(&[0.5, 0.5], 0.05).unwrap(); // h_0 = 0.1
        let mut state = ChainState::new(vec![1.0, 1.0], RngState::from_master(0, 0));
        rc_lmc_step_forced(&mut state, &target, &dist, 0, 0.0).unwrap();
        assert!((state.x[0] - 0.9).abs() < 1e-15);
        assert_eq!(state.x[1], 1.0);
        assert_eq!(state.m, 1);
        assert_eq!(state.nominal_cost, 1);
        assert!((state.elapsed - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rc_step_forced_with_noise() {
        // h_0 = 0.02, xi = 1: x_0 = 1 - 0.02 + sqrt(0.04) = 1.18.
        let target = standard_target(2);
        let dist = phi_explicit(&[0.5, 0.5], 0.01).unwrap();
        let mut state = ChainState::new(vec![1.0, 1.0], RngState::from_master(0, 0));
        rc_lmc_step_forced(&mut state, &target, &dist, 0, 1.0).unwrap();
        assert!((state.x[0] - 1.18).abs() < 1e-15);
    }

    #[test]
    fn rc_step_untouched_coordinates_bit_identical() {
        let target = standard_target(8);
        let dist = phi_uniform(8, 0.001).unwrap();
        let mut state = ChainState::new(
            (0..8).map(|i| i as f64 * 0.37 - 1.0).collect(),
            RngState::from_master(5, 1),
        );
        for _ in 0..200 {
            let before = state.x.clone();
            let r = rc_lmc_step(&mut state, &target, &dist).unwrap();
            let changed: Vec<usize> = (0..8)
                .filter(|&i| state.x[i].to_bits() != before[i].to_bits())
                .collect();
            assert!(changed.iter().all(|&i| i == r));
            assert!(changed.len() <= 1);
        }
    }

    #[test]
    fn lmc_step_forced_examples() {
        // f = |x|^2/2, x = (2,0), h = 0.5, xi = 0 -> (1, 0).
        let target = standard_target(2);
        let mut state = ChainState::new(vec![2.0, 0.0], RngState::from_master(0, 0));
        let grad = target.gradient(&state.x);
        lmc_step_forced(&mut state, &target, 0.5, &grad, &[0.0, 0.0]);
        assert_eq!(state.x, vec![1.0, 0.0]);
        assert_eq!(state.nominal_cost, 2);

        // f = x^T diag(1,4) x / 2, x = (1,1), h = 0.1 -> (0.9, 0.6).
        let target = make_product_target(&[1.0, 4.0]).unwrap();
        let mut state = ChainState::new(vec![1.0, 1.0], RngState::from_master(0, 0));
        let grad = target.gradient(&state.x);
        lmc_step_forced(&mut state, &target, 0.1, &grad, &[0.0, 0.0]);
        assert!((state.x[0] - 0.9).abs() < 1e-15);
        assert!((state.x[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn work_cost_tracks_gradient_units() {
        let spec = crate::targets::GraphSpec {
            nodes: 3,
            edges: vec![(0, 1), (1, 2)],
            weights: vec![1.0, 1.0],
            rho: 1.0,
        };
        let target = crate::targets::make_graph_target(&spec).unwrap();
        let mut state = ChainState::new(vec![0.5; 3], RngState::from_master(1, 0));
        lmc_step(&mut state, &target, 0.01);
        assert_eq!(state.work_cost, target.gradient_cost_units());
        assert_eq!(state.nominal_cost, 3);
    }

    #[test]
    fn diverged_chain_is_poisoned() {
        let target = standard_target(2);
        let dist = phi_uniform(2, 0.01).unwrap();
        let mut state = ChainState::new(vec![f64::INFINITY, 0.0], RngState::from_master(0, 0));
        assert!(rc_lmc_step_forced(&mut state, &target, &dist, 0, 0.0).is_none());
        assert!(state.diverged);
        let frozen = state.x.clone();
        assert!(rc_lmc_step(&mut state, &target, &dist).is_none());
        assert_eq!(state.x, frozen);
        assert_eq!(state.m, 0);
    }

    #[test]
    fn elapsed_time_replays_exactly() {
        let target = make_product_target(&[0.5, 1.0, 2.0]).unwrap();
        let dist = crate::schedule::phi_alpha(target.lips_coord(), 1.0, 0.001).unwrap();
        let mut state = ChainState::new(vec![1.0; 3], RngState::from_master(17, 4));
        let mut coords = Vec::new();
        for _ in 0..5000 {
            coords.push(rc_lmc_step(&mut state, &target, &dist).unwrap());
        }
        let replayed: f64 = coords.iter().map(|&r| dist.step(r)).sum();
        assert!(
            (replayed - state.elapsed).abs() <= 1e-12 * state.elapsed,
            "replayed {replayed} vs recorded {}",
            state.elapsed
        );
        assert_eq!(state.nominal_cost, 5000);
        assert_eq!(state.m, 5000);
    }

    #[test]
    fn ou_coupling_moments_reference_values() {
        let (vb, vi, cov) = ou_coupling_moments(1.0, 0.1);
        assert_eq!(vb, 0.1);
        assert!((vi - 0.090634623461009).abs() < 1e-12);
        assert!((cov - 0.095162581964040).abs() < 1e-12);
    }

    #[test]
    fn coupled_step_taylor_limit() {
        // λh → 0: the exact step collapses to the Euler step.
        let target = make_product_target(&[1.0]).unwrap();
        let h = 1e-8;
        let dist = phi_uniform(1, h).unwrap();
        let euler = ChainState::new(vec![0.7], RngState::from_master(2, 0));
        let exact = ChainState::new(vec![0.7], RngState::from_master(2, 0));
        let mut pair = CoupledPair::new(&target, euler, exact).unwrap();
        for _ in 0..100 {
            coupled_pair_step(&mut pair, &dist);
        }
        assert!(pair.squared_distance() < 1e-12);
    }

    #[test]
    fn coupled_step_shared_noise_mean_zero() {
        // Both chains at the mean: the post-step difference √2(B − I) has
        // mean 0 and variance 2(var_b + var_i − 2cov).
        let target = make_product_target(&[2.0]).unwrap();
        let h = 0.05;
        let dist = phi_uniform(1, h).unwrap();
        let euler = ChainState::new(vec![0.0], RngState::from_master(9, 0));
        let exact = ChainState::new(vec![0.0], RngState::from_master(9, 1));
        let mut pair = CoupledPair::new(&target, euler, exact).unwrap();
        let (vb, vi, cov) = ou_coupling_moments(2.0, h);
        let want_var = 2.0 * (vb + vi - 2.0 * cov);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            pair.euler.x[0] = 0.0;
            pair.exact.x[0] = 0.0;
            coupled_pair_step(&mut pair, &dist);
            let diff = pair.euler.x[0] - pair.exact.x[0];
            sum += diff;
            sum2 += diff * diff;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        let se_mean = (want_var / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * se_mean, "mean {mean}");
        assert!((var - want_var).abs() < 4.0 * want_var * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn coupled_rejects_non_diagonal() {
        let target = crate::targets::make_skewed_target(3, 1.0).unwrap();
        let euler = ChainState::new(vec![0.0; 3], RngState::from_master(0, 0));
        let exact = ChainState::new(vec![0.0; 3], RngState::from_master(0, 1));
        assert!(matches!(
            CoupledPair::new(&target, euler, exact),
            Err(SamplerError::NonDiagonalTarget)
        ));
    }

    fn small_config(method: Method, m: u64, n: u64) -> RunConfig {
        RunConfig {
            method,
            target: TargetSpec::Product { lambdas: vec![1.0, 1.0, 1.0] },
            phi_spec: "uniform".into(),
            h: 0.001,
            iterations: m,
            chains: n,
            master_seed: 99,
            init: InitSpec::Normal { mean: MeanSpec::Scalar(0.0), scale: 1.0 },
            observables: vec![ObservableSpec::second_moment()],
            snapshot_schedule: ScheduleSpec::Geometric(1.5),
        }
    }

    #[test]
    fn ensemble_zero_iterations_snapshots_initial_draws() {
        let config = small_config(Method::Rclmc, 0, 2);
        let target = crate::config::build_target(&config.target).unwrap().model;
        let record =
            run_ensemble_with(&config, &target, RunOptions { capture_states: true }).unwrap();
        assert_eq!(record.snapshots.len(), 1);
        assert_eq!(record.snapshots[0].m, 0);
        // The captured states equal fresh init draws from the same streams.
        let raw = record.raw.unwrap();
        for chain in 0..2u64 {
            let mut rng = RngState::from_master(99, chain);
            let want = draw_init(&config.init, 3, &mut rng);
            let got = &raw.states[0][(chain as usize) * 3..(chain as usize + 1) * 3];
            assert_eq!(got, want.as_slice());
        }
    }

    fn record_fingerprint(r: &EnsembleRecord) -> Vec<u64> {
        let mut out = vec![r.config_hash, r.diverged_chains];
        for s in &r.snapshots {
            out.push(s.m);
            out.push(s.included);
            out.push(s.elapsed_mean.to_bits());
            out.push(s.work_cost_mean.to_bits());
            out.push(s.moments.second_moment.to_bits());
            for v in &s.moments.mean {
                out.push(v.to_bits());
            }
            for o in &s.observables {
                out.push(o.mean.to_bits());
                out.push(o.stderr.to_bits());
            }
        }
        out
    }

    #[test]
    fn ensemble_runs_are_bit_identical() {
        let config = small_config(Method::Rclmc, 500, 130);
        let target = crate::config::build_target(&config.target).unwrap().model;
        let a = run_ensemble(&config, &target).unwrap();
        let b = run_ensemble(&config, &target).unwrap();
        assert_eq!(record_fingerprint(&a), record_fingerprint(&b));
    }

    #[test]
    fn ensemble_identical_across_thread_counts() {
        let config = small_config(Method::Lmc, 200, 97);
        let target = crate::config::build_target(&config.target).unwrap().model;
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_ensemble(&config, &target).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_ensemble(&config, &target).unwrap());
        assert_eq!(record_fingerprint(&one), record_fingerprint(&four));
    }

    #[test]
    fn ensemble_second_moment_reaches_biased_fixed_point() {
        // d = 10 standard Gaussian, uniform Φ, h = 1e-3, M = 2·10⁴, N = 10⁴:
        // per-coordinate second moment settles at 2/(2 − dh) per coordinate.
        let d = 10;
        let config = RunConfig {
            method: Method::Rclmc,
            target: TargetSpec::Product { lambdas: vec![1.0; d] },
            phi_spec: "uniform".into(),
            h: 1e-3,
            iterations: 20_000,
            chains: 10_000,
            master_seed: 31337,
            init: InitSpec::Normal { mean: MeanSpec::Scalar(0.0), scale: 1.0 },
            observables: vec![ObservableSpec::second_moment()],
            snapshot_schedule: ScheduleSpec::Explicit(vec![20_000]),
        };
        let target = crate::config::build_target(&config.target).unwrap().model;
        let record = run_ensemble(&config, &target).unwrap();
        let last = record.snapshots.last().unwrap();
        let fixed_point = 2.0 / (2.0 - d as f64 * config.h);
        for i in 0..d {
            let got = last.moments.coord_second[i];
            let se = last.moments.coord_second_se[i];
            assert!(
                (got - fixed_point).abs() <= 3.0 * se,
                "coordinate {i}: {got} vs {fixed_point} (3se = {})",
                3.0 * se
            );
        }
    }

    #[test]
    fn ensemble_counts_diverged_chains() {
        // Absurd step size blows the chain up; poison-and-skip keeps the run alive.
        let mut config = small_config(Method::Rclmc, 2000, 16);
        config.h = 1e6;
        let target = crate::config::build_target(&config.target).unwrap().model;
        let record = run_ensemble(&config, &target).unwrap();
        assert!(record.diverged_chains > 0);
        let last = record.snapshots.last().unwrap();
        assert_eq!(last.included + record.diverged_chains, 16);
    }
}
