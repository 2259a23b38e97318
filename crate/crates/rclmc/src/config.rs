//! Experiment configuration: JSON schema, target catalog lookup, snapshot
//! schedules, and the canonical-form config hash stamped on every output.

use crate::linalg::SquareMat;
use crate::schedule::{parse_phi_spec, CoordinateDistribution, ScheduleError};
use crate::targets::{
    make_gaussian_target, make_graph_target, make_product_target, make_section5_target,
    make_skewed_target, GraphSpec, QuadraticSpec, TargetError, TargetModel,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("N = {n} chains is invalid; at least one chain is required")]
    BadChainCount { n: u64 },
    #[error("step size h = {h} must be positive")]
    BadStep { h: f64 },
    #[error("snapshot ratio {ratio} must exceed 1")]
    BadRatio { ratio: f64 },
    #[error("init vector has dimension {got}, target has dimension {expected}")]
    InitDimension { expected: usize, got: usize },
    #[error("observable psi_spectral({k}) exceeds target dimension {dim}")]
    ObservableDimension { k: usize, dim: usize },
    #[error("unknown plain observable {0:?}; expected \"second_moment\" or \"mean\"")]
    UnknownObservable(String),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lmc,
    Rclmc,
}

impl Method {
    /// Nominal partial-derivative evaluations per iteration.
    pub fn cost_per_iteration(&self, dim: usize) -> u64 {
        match self {
            Method::Lmc => dim as u64,
            Method::Rclmc => 1,
        }
    }
}

/// Target catalog entry, addressable by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum TargetSpec {
    Gaussian { precision: Vec<Vec<f64>>, mean: Vec<f64> },
    Section5 { seed: u64 },
    Graph { nodes: usize, edges: Vec<(usize, usize)>, weights: Vec<f64>, rho: f64 },
    Product { lambdas: Vec<f64> },
    Skewed { dim: usize, rho: f64 },
}

/// A constructed target plus the closed-form observable reference the
/// section5 constructor reports.
pub struct BuiltTarget {
    pub model: TargetModel,
    pub section5_reference: Option<f64>,
}

pub fn build_target(spec: &TargetSpec) -> Result<BuiltTarget, ConfigError> {
    let built = match spec {
        TargetSpec::Gaussian { precision, mean } => {
            let m = SquareMat::from_rows(precision).map_err(TargetError::from)?;
            BuiltTarget {
                model: make_gaussian_target(&QuadraticSpec { precision: m, mean: mean.clone() })?,
                section5_reference: None,
            }
        }
        TargetSpec::Section5 { seed } => {
            let (model, reference) = make_section5_target(*seed)?;
            BuiltTarget { model, section5_reference: Some(reference) }
        }
        TargetSpec::Graph { nodes, edges, weights, rho } => BuiltTarget {
            model: make_graph_target(&GraphSpec {
                nodes: *nodes,
                edges: edges.clone(),
                weights: weights.clone(),
                rho: *rho,
            })?,
            section5_reference: None,
        },
        TargetSpec::Product { lambdas } => {
            BuiltTarget { model: make_product_target(lambdas)?, section5_reference: None }
        }
        TargetSpec::Skewed { dim, rho } => {
            BuiltTarget { model: make_skewed_target(*dim, *rho)?, section5_reference: None }
        }
    };
    Ok(built)
}

/// Scalar broadcast or per-coordinate vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeanSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl MeanSpec {
    pub fn component(&self, i: usize) -> f64 {
        match self {
            MeanSpec::Scalar(v) => *v,
            MeanSpec::Vector(v) => v[i],
        }
    }

    fn check_dim(&self, dim: usize) -> Result<(), ConfigError> {
        if let MeanSpec::Vector(v) = self {
            if v.len() != dim {
                return Err(ConfigError::InitDimension { expected: dim, got: v.len() });
            }
        }
        Ok(())
    }
}

/// Initial distribution of the chains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitSpec {
    /// Point mass at the given vector.
    Point(Vec<f64>),
    /// Independent normals: x_i = mean_i + scale·z_i.
    Normal { mean: MeanSpec, scale: f64 },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Normal { mean: MeanSpec::Scalar(0.0), scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    PsiSpectral { psi_spectral: usize },
    Plain(String),
}

impl ObservableSpec {
    pub fn second_moment() -> Self {
        ObservableSpec::Plain("second_moment".into())
    }

    pub fn psi_spectral(k: usize) -> Self {
        ObservableSpec::PsiSpectral { psi_spectral: k }
    }

    pub fn label(&self) -> String {
        match self {
            ObservableSpec::PsiSpectral { psi_spectral } => format!("psi_spectral_{psi_spectral}"),
            ObservableSpec::Plain(name) => name.clone(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), ConfigError> {
        match self {
            ObservableSpec::PsiSpectral { psi_spectral } => {
                if *psi_spectral > dim {
                    return Err(ConfigError::ObservableDimension { k: *psi_spectral, dim });
                }
            }
            ObservableSpec::Plain(name) => {
                if name != "second_moment" && name != "mean" {
                    return Err(ConfigError::UnknownObservable(name.clone()));
                }
            }
        }
        Ok(())
    }

    /// ψ(x) for this observable.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            ObservableSpec::PsiSpectral { psi_spectral } => {
                crate::diagnostics::psi_spectral(x, *psi_spectral)
            }
            ObservableSpec::Plain(name) => match name.as_str() {
                "second_moment" => x.iter().map(|v| v * v).sum(),
                "mean" => x.iter().sum::<f64>() / x.len() as f64,
                _ => f64::NAN,
            },
        }
    }

    /// E_p ψ under the (Gaussian) target.
    pub fn reference(&self, target: &TargetModel) -> Result<f64, TargetError> {
        match self {
            ObservableSpec::PsiSpectral { psi_spectral } => {
                target.psi_spectral_reference(*psi_spectral)
            }
            ObservableSpec::Plain(name) => match name.as_str() {
                "second_moment" => target.second_moment_reference(),
                "mean" => Ok(target.mean_reference()),
                other => Err(TargetError::DimensionMismatch {
                    expected: 0,
                    got: other.len(), // unreachable after validate()
                }),
            },
        }
    }
}

/// Snapshot iteration grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleSpec {
    /// Iterations 0, 1, ⌈r⌉, ⌈r²⌉, …, M (log-spaced abscissae for
    /// error-versus-cost curves).
    Geometric(f64),
    Explicit(Vec<u64>),
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Geometric(1.3)
    }
}

impl ScheduleSpec {
    /// Sorted, deduplicated snapshot iterations, always including 0 and M.
    pub fn points(&self, m_total: u64) -> Result<Vec<u64>, ConfigError> {
        let mut points = vec![0, m_total];
        match self {
            ScheduleSpec::Geometric(ratio) => {
                if !(*ratio > 1.0) {
                    return Err(ConfigError::BadRatio { ratio: *ratio });
                }
                let mut cur = 1.0_f64;
                while (cur as u64) < m_total {
                    points.push(cur as u64);
                    cur = (cur * ratio).max(cur + 1.0);
                }
            }
            ScheduleSpec::Explicit(ms) => {
                points.extend(ms.iter().copied().filter(|&m| m <= m_total));
            }
        }
        points.sort_unstable();
        points.dedup();
        Ok(points)
    }
}

/// One experiment: method, target, Φ, step size, sizes, seeding, initial
/// distribution, observables, and the snapshot grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub target: TargetSpec,
    pub phi_spec: String,
    pub h: f64,
    #[serde(rename = "M")]
    pub iterations: u64,
    #[serde(rename = "N")]
    pub chains: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default = "default_observables")]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub snapshot_schedule: ScheduleSpec,
}

fn default_observables() -> Vec<ObservableSpec> {
    vec![ObservableSpec::second_moment()]
}

impl RunConfig {
    pub fn validate(&self, target: &TargetModel) -> Result<(), ConfigError> {
        if self.chains == 0 {
            return Err(ConfigError::BadChainCount { n: self.chains });
        }
        if !(self.h > 0.0) {
            return Err(ConfigError::BadStep { h: self.h });
        }
        match &self.init {
            InitSpec::Point(v) => {
                if v.len() != target.dim() {
                    return Err(ConfigError::InitDimension {
                        expected: target.dim(),
                        got: v.len(),
                    });
                }
            }
            InitSpec::Normal { mean, .. } => mean.check_dim(target.dim())?,
        }
        for obs in &self.observables {
            obs.validate(target.dim())?;
        }
        self.snapshot_schedule.points(self.iterations)?;
        self.build_distribution(target)?;
        Ok(())
    }

    /// Coordinate distribution implied by `phi_spec` (also used by LMC runs
    /// only to validate the spec string).
    pub fn build_distribution(
        &self,
        target: &TargetModel,
    ) -> Result<CoordinateDistribution, ConfigError> {
        Ok(parse_phi_spec(&self.phi_spec, target.lips_coord(), target.hess_lips_coord(), self.h)?)
    }

    pub fn snapshot_points(&self) -> Result<Vec<u64>, ConfigError> {
        self.snapshot_schedule.points(self.iterations)
    }

    /// Canonical JSON form: serde emission with struct field order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialization cannot fail")
    }

    /// 64-bit FNV-1a hash of the canonical JSON, for output provenance.
    pub fn hash(&self) -> u64 {
        fnv1a64(self.canonical_json().as_bytes())
    }
}

/// Input to the `benchmark` subcommand: several configs over one target and
/// one observable, compared at matched nominal cost.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub configs: Vec<RunConfig>,
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
