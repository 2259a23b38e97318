//! Strongly log-concave target densities p(x) ∝ exp(-f(x)) with closed-form
//! constants.
//!
//! A [`TargetModel`] bundles the potential f, per-coordinate partial
//! derivatives ∂_i f, the strong-convexity constant μ, the gradient Lipschitz
//! constant L, per-coordinate constants L_i (and H_i when the Hessian is
//! coordinate-Lipschitz), and a per-partial work-unit table. The catalog holds:
//!
//! * dense Gaussian targets f(x) = ½(x-b)ᵀA(x-b) built from a precision matrix;
//! * the 100-dimensional block benchmark target whose first ten coordinates
//!   carry the random precision (T + 10I)ᵀ(T + 10I) and whose remaining ninety
//!   coordinates are standard normal;
//! * graph-coupled quadratics f(x) = Σ_{(i,j)∈E} w_ij (x_i - x_j)²/2 + ρ|x|²/2,
//!   where evaluating ∂_i f touches only edges incident to node i, so a full
//!   gradient genuinely costs a factor of order d more than one partial.
//!
//! μ and L for dense quadratics come from a cyclic Jacobi eigendecomposition;
//! no external linear algebra is involved.

use crate::linalg::{inverse_spd, jacobi_eigen, SquareMat};
use crate::rng::{RngState, TARGET_STREAM};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("precision matrix is not symmetric: |A[{i}][{j}] - A[{j}][{i}]| = {dev:e} exceeds 1e-12")]
    NotSymmetric { i: usize, j: usize, dev: f64 },
    #[error("precision matrix is not positive definite: eigenvalue {value:e} at index {index}")]
    NotPositiveDefinite { index: usize, value: f64 },
    #[error("block precision is numerically singular: smallest eigenvalue {lambda_min:e} vs largest {lambda_max:e}")]
    SingularBlock { lambda_min: f64, lambda_max: f64 },
    #[error("graph edge ({i},{j}) is a self-loop")]
    SelfLoop { i: usize, j: usize },
    #[error("graph edge ({i},{j}) appears more than once")]
    DuplicateEdge { i: usize, j: usize },
    #[error("graph edge ({i},{j}) is out of range for {nodes} nodes")]
    EdgeOutOfRange { i: usize, j: usize, nodes: usize },
    #[error("ridge rho = {rho} must be positive (strong convexity is lost otherwise)")]
    NonPositiveRidge { rho: f64 },
    #[error("edge weight {w} at edge index {index} is negative")]
    NegativeWeight { index: usize, w: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("linear algebra failure: {0}")]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Dense Gaussian specification: f(x) = ½ (x-b)ᵀ A (x-b).
#[derive(Clone, Debug)]
pub struct QuadraticSpec {
    pub precision: SquareMat,
    pub mean: Vec<f64>,
}

/// Graph-coupled quadratic: f(x) = Σ_{(i,j)∈E} w_ij (x_i - x_j)²/2 + ρ|x|²/2.
#[derive(Clone, Debug)]
pub struct GraphSpec {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
    pub rho: f64,
}

#[derive(Clone, Debug)]
enum Kernel {
    /// f(x) = ½ (x-b)ᵀ A (x-b) with dense rows.
    DenseQuadratic { precision: SquareMat, mean: Vec<f64> },
    /// Dense k×k precision block on the first k coordinates, unit precision on
    /// the rest, mean zero.
    BlockQuadratic { block: SquareMat, k: usize },
    /// CSR adjacency; `offsets[i]..offsets[i+1]` indexes `(neighbor, weight)`.
    Graph { offsets: Vec<usize>, adjacency: Vec<(usize, f64)>, rho: f64 },
}

/// A strongly log-concave target with cost accounting.
///
/// Immutable after construction; safe to share across chain workers. Cost
/// counters live in the chain state, not here.
#[derive(Clone, Debug)]
pub struct TargetModel {
    dim: usize,
    mu: f64,
    lips_global: f64,
    lips_coord: Vec<f64>,
    hess_lips_coord: Option<Vec<f64>>,
    minimizer: Option<Vec<f64>>,
    partial_cost_units: Vec<u64>,
    kernel: Kernel,
}

impl TargetModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Strong-convexity constant μ.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Global gradient Lipschitz constant L.
    pub fn lips_global(&self) -> f64 {
        self.lips_global
    }

    /// Per-coordinate gradient Lipschitz constants L_i.
    pub fn lips_coord(&self) -> &[f64] {
        &self.lips_coord
    }

    /// Per-coordinate Hessian Lipschitz constants H_i, when available.
    pub fn hess_lips_coord(&self) -> Option<&[f64]> {
        self.hess_lips_coord.as_deref()
    }

    pub fn minimizer(&self) -> Option<&[f64]> {
        self.minimizer.as_deref()
    }

    /// Work units charged for one call to `partial(i, ·)`.
    pub fn partial_cost_units(&self, i: usize) -> u64 {
        self.partial_cost_units[i]
    }

    /// Work units charged for one full gradient, Σ_i partial_cost_units(i).
    pub fn gradient_cost_units(&self) -> u64 {
        self.partial_cost_units.iter().sum()
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kernel {
            Kernel::DenseQuadratic { precision, mean } => {
                let n = self.dim;
                let mut f = 0.0;
                for i in 0..n {
                    let row = precision.row(i);
                    let di = x[i] - mean[i];
                    let mut s = 0.0;
                    for j in 0..n {
                        s += row[j] * (x[j] - mean[j]);
                    }
                    f += di * s;
                }
                0.5 * f
            }
            Kernel::BlockQuadratic { block, k } => {
                let mut f = 0.0;
                for i in 0..*k {
                    let row = block.row(i);
                    let mut s = 0.0;
                    for j in 0..*k {
                        s += row[j] * x[j];
                    }
                    f += x[i] * s;
                }
                for xi in &x[*k..] {
                    f += xi * xi;
                }
                0.5 * f
            }
            Kernel::Graph { offsets, adjacency, rho } => {
                let mut f = 0.0;
                for i in 0..self.dim {
                    for &(j, w) in &adjacency[offsets[i]..offsets[i + 1]] {
                        // Each undirected edge is stored twice; halve once more.
                        if j > i {
                            let d = x[i] - x[j];
                            f += 0.5 * w * d * d;
                        }
                    }
                }
                f + 0.5 * rho * x.iter().map(|v| v * v).sum::<f64>()
            }
        }
    }

    /// ∂_i f(x). Touches only the data needed for coordinate `i`.
    pub fn partial(&self, i: usize, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kernel {
            Kernel::DenseQuadratic { precision, mean } => {
                let row = precision.row(i);
                let mut s = 0.0;
                for j in 0..self.dim {
                    s += row[j] * (x[j] - mean[j]);
                }
                s
            }
            Kernel::BlockQuadratic { block, k } => {
                if i < *k {
                    let row = block.row(i);
                    let mut s = 0.0;
                    for j in 0..*k {
                        s += row[j] * x[j];
                    }
                    s
                } else {
                    x[i]
                }
            }
            Kernel::Graph { offsets, adjacency, rho } => {
                let mut s = rho * x[i];
                for &(j, w) in &adjacency[offsets[i]..offsets[i + 1]] {
                    s += w * (x[i] - x[j]);
                }
                s
            }
        }
    }

    /// Full gradient written into `out`; `out[i] == partial(i, x)` exactly.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        for i in 0..self.dim {
            out[i] = self.partial(i, x);
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.gradient_into(x, &mut out);
        out
    }

    /// Dense precision matrix of the target. All catalog targets are Gaussian,
    /// so this always succeeds for them.
    pub fn precision_matrix(&self) -> SquareMat {
        match &self.kernel {
            Kernel::DenseQuadratic { precision, .. } => precision.clone(),
            Kernel::BlockQuadratic { block, k } => {
                let mut a = SquareMat::identity(self.dim);
                for i in 0..*k {
                    for j in 0..*k {
                        a.set(i, j, block.get(i, j));
                    }
                }
                a
            }
            Kernel::Graph { offsets, adjacency, rho } => {
                let mut a = SquareMat::zeros(self.dim);
                for i in 0..self.dim {
                    let mut diag = *rho;
                    for &(j, w) in &adjacency[offsets[i]..offsets[i + 1]] {
                        diag += w;
                        a.set(i, j, a.get(i, j) - w);
                    }
                    a.set(i, i, diag);
                }
                a
            }
        }
    }

    /// Mean of the Gaussian target (the minimizer of f).
    pub fn gaussian_mean(&self) -> Vec<f64> {
        match &self.kernel {
            Kernel::DenseQuadratic { mean, .. } => mean.clone(),
            _ => vec![0.0; self.dim],
        }
    }

    /// Covariance A⁻¹ of the Gaussian target.
    pub fn covariance_matrix(&self) -> Result<SquareMat, TargetError> {
        Ok(inverse_spd(&self.precision_matrix())?)
    }

    /// Per-coordinate precisions λ_i if the precision matrix is exactly
    /// diagonal; `None` otherwise.
    pub fn diagonal_precision(&self) -> Option<Vec<f64>> {
        let a = self.precision_matrix();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j && a.get(i, j) != 0.0 {
                    return None;
                }
            }
        }
        Some(a.diag())
    }

    /// E_p |x|² = tr(A⁻¹) + |b|².
    pub fn second_moment_reference(&self) -> Result<f64, TargetError> {
        let cov = self.covariance_matrix()?;
        let b = self.gaussian_mean();
        Ok(cov.trace() + b.iter().map(|v| v * v).sum::<f64>())
    }

    /// E_p Σ_{i<k} x_i² = Σ_{i<k} ((A⁻¹)_{ii} + b_i²).
    pub fn psi_spectral_reference(&self, k: usize) -> Result<f64, TargetError> {
        let cov = self.covariance_matrix()?;
        let b = self.gaussian_mean();
        Ok((0..k).map(|i| cov.get(i, i) + b[i] * b[i]).sum())
    }

    /// E_p (1/d) Σ_i x_i.
    pub fn mean_reference(&self) -> f64 {
        let b = self.gaussian_mean();
        b.iter().sum::<f64>() / self.dim as f64
    }
}

/// Floor degenerate L_i at 1e-12·L so probabilities φ_i(α) stay positive.
fn floor_lips(lips: &mut [f64], lips_global: f64) {
    let floor = 1e-12 * lips_global;
    for l in lips.iter_mut() {
        if *l < floor {
            *l = floor;
        }
    }
}

/// Build a dense Gaussian target from an SPD precision matrix.
///
/// Constants are exact: L_i = A_ii, μ = λ_min(A), L = λ_max(A), H_i = 0,
/// minimizer = b, one work unit per partial (dense row).
pub fn make_gaussian_target(spec: &QuadraticSpec) -> Result<TargetModel, TargetError> {
    let a = &spec.precision;
    let d = a.dim();
    if spec.mean.len() != d {
        return Err(TargetError::DimensionMismatch { expected: d, got: spec.mean.len() });
    }
    let (i, j, dev) = a.symmetry_deviation();
    if dev > 1e-12 * (1.0 + a.max_abs()) {
        return Err(TargetError::NotSymmetric { i, j, dev });
    }
    let eig = jacobi_eigen(a)?;
    for (index, &value) in eig.values.iter().enumerate() {
        if value <= 0.0 {
            return Err(TargetError::NotPositiveDefinite { index, value });
        }
    }
    let mu = eig.values[0];
    let lips_global = eig.values[d - 1];
    let mut lips_coord = a.diag();
    floor_lips(&mut lips_coord, lips_global);
    Ok(TargetModel {
        dim: d,
        mu,
        lips_global,
        lips_coord,
        hess_lips_coord: Some(vec![0.0; d]),
        minimizer: Some(spec.mean.clone()),
        partial_cost_units: vec![1; d],
        kernel: Kernel::DenseQuadratic { precision: a.clone(), mean: spec.mean.clone() },
    })
}

/// Gaussian target with diagonal precision diag(λ_1..λ_d), mean zero.
pub fn make_product_target(lambdas: &[f64]) -> Result<TargetModel, TargetError> {
    make_gaussian_target(&QuadraticSpec {
        precision: SquareMat::diagonal(lambdas),
        mean: vec![0.0; lambdas.len()],
    })
}

/// Highly skewed Gaussian target with precision eeᵀ + ρI.
pub fn make_skewed_target(dim: usize, rho: f64) -> Result<TargetModel, TargetError> {
    if rho <= 0.0 {
        return Err(TargetError::NonPositiveRidge { rho });
    }
    let mut a = SquareMat::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            a.set(i, j, 1.0 + if i == j { rho } else { 0.0 });
        }
    }
    make_gaussian_target(&QuadraticSpec { precision: a, mean: vec![0.0; dim] })
}

/// Dimension of the block benchmark target.
pub const SECTION5_DIM: usize = 100;
/// Size of its random precision block.
pub const SECTION5_BLOCK: usize = 10;

/// Block benchmark target: the first 10 of 100 coordinates carry precision
/// (T + 10I)ᵀ(T + 10I) with T a seeded 10×10 matrix of i.i.d. standard
/// normals (drawn row-major); the remaining 90 coordinates have unit
/// precision. Returns the target and E_p ψ = tr(block⁻¹) for the spectral
/// observable over the block.
pub fn make_section5_target(seed: u64) -> Result<(TargetModel, f64), TargetError> {
    let k = SECTION5_BLOCK;
    let mut rng = RngState::from_master(seed, TARGET_STREAM);
    let mut t = SquareMat::zeros(k);
    for i in 0..k {
        for j in 0..k {
            t.set(i, j, rng.standard_normal());
        }
    }
    make_section5_target_from_matrix(&t)
}

/// Same construction from an explicit T matrix (tests force T = 0 here).
pub fn make_section5_target_from_matrix(t: &SquareMat) -> Result<(TargetModel, f64), TargetError> {
    let k = SECTION5_BLOCK;
    let d = SECTION5_DIM;
    if t.dim() != k {
        return Err(TargetError::DimensionMismatch { expected: k, got: t.dim() });
    }
    let shift = (d / k) as f64; // d/10 = 10
    let mut b = t.clone();
    for i in 0..k {
        b.set(i, i, b.get(i, i) + shift);
    }
    let block = b.gram(); // (T + 10I)ᵀ(T + 10I), exactly symmetric
    let eig = jacobi_eigen(&block)?;
    let lambda_min = eig.values[0];
    let lambda_max = eig.values[k - 1];
    if lambda_min <= 1e-10 * lambda_max.max(1.0) {
        return Err(TargetError::SingularBlock { lambda_min, lambda_max });
    }
    let reference_psi: f64 = eig.values.iter().map(|l| 1.0 / l).sum();
    let mu = lambda_min.min(1.0);
    let lips_global = lambda_max.max(1.0);
    let mut lips_coord = vec![1.0; d];
    for (i, l) in lips_coord.iter_mut().enumerate().take(k) {
        *l = block.get(i, i);
    }
    floor_lips(&mut lips_coord, lips_global);
    let target = TargetModel {
        dim: d,
        mu,
        lips_global,
        lips_coord,
        hess_lips_coord: Some(vec![0.0; d]),
        minimizer: Some(vec![0.0; d]),
        partial_cost_units: vec![1; d],
        kernel: Kernel::BlockQuadratic { block, k },
    };
    Ok((target, reference_psi))
}

/// Build a graph-coupled quadratic target.
///
/// ∂_i f touches only edges incident to node i, so partial_cost_units(i) =
/// deg(i) + 1 and a full gradient costs 2|E| + d work units. μ = ρ exactly
/// (the weighted Laplacian is PSD with a zero eigenvalue), and L = ρ +
/// λ_max(Laplacian) from the assembled Hessian.
pub fn make_graph_target(spec: &GraphSpec) -> Result<TargetModel, TargetError> {
    let d = spec.nodes;
    if spec.rho <= 0.0 {
        return Err(TargetError::NonPositiveRidge { rho: spec.rho });
    }
    if spec.weights.len() != spec.edges.len() {
        return Err(TargetError::DimensionMismatch {
            expected: spec.edges.len(),
            got: spec.weights.len(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for (idx, &(i, j)) in spec.edges.iter().enumerate() {
        if i == j {
            return Err(TargetError::SelfLoop { i, j });
        }
        if i >= d || j >= d {
            return Err(TargetError::EdgeOutOfRange { i, j, nodes: d });
        }
        let key = (i.min(j), i.max(j));
        if !seen.insert(key) {
            return Err(TargetError::DuplicateEdge { i, j });
        }
        if spec.weights[idx] < 0.0 {
            return Err(TargetError::NegativeWeight { index: idx, w: spec.weights[idx] });
        }
    }

    let mut degree = vec![0usize; d];
    for &(i, j) in &spec.edges {
        degree[i] += 1;
        degree[j] += 1;
    }
    let mut offsets = vec![0usize; d + 1];
    for i in 0..d {
        offsets[i + 1] = offsets[i] + degree[i];
    }
    let mut adjacency = vec![(0usize, 0.0); 2 * spec.edges.len()];
    let mut cursor = offsets.clone();
    for (idx, &(i, j)) in spec.edges.iter().enumerate() {
        let w = spec.weights[idx];
        adjacency[cursor[i]] = (j, w);
        cursor[i] += 1;
        adjacency[cursor[j]] = (i, w);
        cursor[j] += 1;
    }

    // Weighted degree gives L_i = Σ_j w_ij + ρ; the assembled Hessian gives L.
    let mut lips_coord = vec![0.0; d];
    for i in 0..d {
        lips_coord[i] =
            spec.rho + adjacency[offsets[i]..offsets[i + 1]].iter().map(|&(_, w)| w).sum::<f64>();
    }
    let partial_cost_units: Vec<u64> = degree.iter().map(|&deg| (deg + 1) as u64).collect();

    let model = TargetModel {
        dim: d,
        mu: spec.rho,
        lips_global: 0.0, // patched below from the assembled Hessian
        lips_coord,
        hess_lips_coord: Some(vec![0.0; d]),
        minimizer: Some(vec![0.0; d]),
        partial_cost_units,
        kernel: Kernel::Graph { offsets, adjacency, rho: spec.rho },
    };
    let hessian = model.precision_matrix();
    let eig = jacobi_eigen(&hessian)?;
    let mut model = model;
    model.lips_global = eig.values[d - 1];
    let l = model.lips_global;
    floor_lips(&mut model.lips_coord, l);
    Ok(model)
}

/// Max over i of |∂_i f(x) − central difference of f| at width `delta`.
pub fn validate_partials(target: &TargetModel, x: &[f64], delta: f64) -> f64 {
    assert!(delta > 0.0, "delta must be positive");
    let mut worst = 0.0_f64;
    let mut xp = x.to_vec();
    for i in 0..target.dim() {
        let orig = xp[i];
        xp[i] = orig + delta;
        let fp = target.potential(&xp);
        xp[i] = orig - delta;
        let fm = target.potential(&xp);
        xp[i] = orig;
        let fd = (fp - fm) / (2.0 * delta);
        worst = worst.max((target.partial(i, x) - fd).abs());
    }
    worst
}
