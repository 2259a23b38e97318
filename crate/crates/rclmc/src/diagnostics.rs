//! Distance and error estimators.
//!
//! Wasserstein-2 between Gaussians has the closed Bures form
//!
//! ```text
//! W² = |m₁ - m₂|² + tr(Σ₁ + Σ₂ - 2 (Σ₂^{1/2} Σ₁ Σ₂^{1/2})^{1/2}),
//! ```
//!
//! which this module evaluates with Jacobi-based matrix square roots. Full
//! empirical W in d > 1 is deliberately not estimated; experiments are checked
//! through exact Gaussian endpoints, 1-D order statistics, and the second
//! moment lower bound W(q, p) ≥ √(E_q|x|²) − √(E_p|x|²).

use crate::linalg::{jacobi_eigen, sqrt_psd, SquareMat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("covariance is not SPD: eigenvalue {value:e} at index {index}")]
    NotSpd { index: usize, value: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("numerical failure: W² radicand = {value:e} below -1e-9")]
    NegativeRadicand { value: f64 },
    #[error("at least {needed} samples required, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Sample moments with standard errors.
#[derive(Clone, Debug)]
pub struct MomentSummary {
    pub n: u64,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// Per-coordinate second moments E x_i².
    pub coord_second: Vec<f64>,
    pub coord_second_se: Vec<f64>,
    /// E|x|² estimate.
    pub second_moment: f64,
    pub second_moment_se: f64,
    pub cov: Option<SquareMat>,
}

impl MomentSummary {
    pub fn from_samples(samples: &[Vec<f64>], with_cov: bool) -> Self {
        let n = samples.len();
        assert!(n > 0, "need at least one sample");
        let d = samples[0].len();
        let mut sum_x = vec![0.0; d];
        let mut sum_x2 = vec![0.0; d];
        let mut sum_x4 = vec![0.0; d];
        let mut sum_abs2 = 0.0;
        let mut sum_abs4 = 0.0;
        for s in samples {
            let mut abs2 = 0.0;
            for i in 0..d {
                let v = s[i];
                sum_x[i] += v;
                sum_x2[i] += v * v;
                sum_x4[i] += v * v * v * v;
                abs2 += v * v;
            }
            sum_abs2 += abs2;
            sum_abs4 += abs2 * abs2;
        }
        let mut summary =
            Self::from_sums(n as u64, &sum_x, &sum_x2, &sum_x4, sum_abs2, sum_abs4);
        if with_cov {
            let mut cov = SquareMat::zeros(d);
            for i in 0..d {
                for j in i..d {
                    let mut s = 0.0;
                    for samp in samples {
                        s += (samp[i] - summary.mean[i]) * (samp[j] - summary.mean[j]);
                    }
                    let v = s / n as f64;
                    cov.set(i, j, v);
                    cov.set(j, i, v);
                }
            }
            summary.cov = Some(cov);
        }
        summary
    }

    /// Build from accumulated power sums (the ensemble runner path).
    pub(crate) fn from_sums(
        n: u64,
        sum_x: &[f64],
        sum_x2: &[f64],
        sum_x4: &[f64],
        sum_abs2: f64,
        sum_abs4: f64,
    ) -> Self {
        let nf = n as f64;
        let d = sum_x.len();
        let mean: Vec<f64> = sum_x.iter().map(|s| s / nf).collect();
        let mean_se: Vec<f64> = (0..d)
            .map(|i| {
                let var = (sum_x2[i] / nf - mean[i] * mean[i]).max(0.0);
                (var / nf).sqrt()
            })
            .collect();
        let coord_second: Vec<f64> = sum_x2.iter().map(|s| s / nf).collect();
        let coord_second_se: Vec<f64> = (0..d)
            .map(|i| {
                let var = (sum_x4[i] / nf - coord_second[i] * coord_second[i]).max(0.0);
                (var / nf).sqrt()
            })
            .collect();
        let second_moment = sum_abs2 / nf;
        let second_var = (sum_abs4 / nf - second_moment * second_moment).max(0.0);
        MomentSummary {
            n,
            mean,
            mean_se,
            coord_second,
            coord_second_se,
            second_moment,
            second_moment_se: (second_var / nf).sqrt(),
            cov: None,
        }
    }
}

fn check_spd(cov: &SquareMat) -> Result<(), DiagnosticsError> {
    let eig = jacobi_eigen(cov)?;
    let scale = eig.values.last().copied().unwrap_or(0.0).abs().max(1.0);
    for (index, &value) in eig.values.iter().enumerate() {
        if value < -1e-9 * scale {
            return Err(DiagnosticsError::NotSpd { index, value });
        }
    }
    Ok(())
}

/// Exact Wasserstein-2 distance between N(m₁, Σ₁) and N(m₂, Σ₂).
pub fn gaussian_w2(
    mean1: &[f64],
    cov1: &SquareMat,
    mean2: &[f64],
    cov2: &SquareMat,
) -> Result<f64, DiagnosticsError> {
    let d = mean1.len();
    if mean2.len() != d || cov1.dim() != d || cov2.dim() != d {
        return Err(DiagnosticsError::DimensionMismatch { left: d, right: mean2.len() });
    }
    check_spd(cov1)?;
    if mean1 == mean2 && cov1 == cov2 {
        return Ok(0.0);
    }
    check_spd(cov2)?;
    let root2 = sqrt_psd(cov2)?;
    let inner = root2.mul(cov1).mul(&root2);
    // Symmetrize against rounding before the second root.
    let mut sym = inner.clone();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (inner.get(i, j) + inner.get(j, i));
            sym.set(i, j, v);
            sym.set(j, i, v);
        }
    }
    let cross = sqrt_psd(&sym)?;
    let mean_term: f64 = mean1.iter().zip(mean2).map(|(a, b)| (a - b) * (a - b)).sum();
    let radicand = mean_term + cov1.trace() + cov2.trace() - 2.0 * cross.trace();
    if radicand < -1e-9 {
        return Err(DiagnosticsError::NegativeRadicand { value: radicand });
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Exact W₂ between two 1-D empirical measures with equal sample counts:
/// RMS difference of the sorted order statistics.
pub fn w2_1d_empirical(samples_a: &[f64], samples_b: &[f64]) -> Result<f64, DiagnosticsError> {
    if samples_a.is_empty() {
        return Err(DiagnosticsError::TooFewSamples { needed: 1, got: 0 });
    }
    if samples_a.len() != samples_b.len() {
        return Err(DiagnosticsError::DimensionMismatch {
            left: samples_a.len(),
            right: samples_b.len(),
        });
    }
    let mut a = samples_a.to_vec();
    let mut b = samples_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = a.len() as f64;
    let sum: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / n).sqrt())
}

/// Spectral norm of the rank-one matrix 𝗑𝗑ᵀ built from the first k entries,
/// which collapses to Σ_{i<k} x_i².
pub fn psi_spectral(x: &[f64], k: usize) -> f64 {
    debug_assert!(k <= x.len());
    x[..k].iter().map(|v| v * v).sum()
}

/// Error_M = |N⁻¹ Σ ψ(x⁽ⁱ⁾) − E_p ψ| with the CLT standard error of the mean.
pub fn error_m(psi_values: &[f64], reference: f64) -> Result<(f64, f64), DiagnosticsError> {
    let n = psi_values.len();
    if n < 2 {
        return Err(DiagnosticsError::TooFewSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = psi_values.iter().sum::<f64>() / nf;
    let var = psi_values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    Ok(((mean - reference).abs(), (var / nf).sqrt()))
}

/// Error_M evaluated through an observable over vector samples.
pub fn error_m_over<F>(
    samples: &[Vec<f64>],
    psi: F,
    reference: f64,
) -> Result<(f64, f64), DiagnosticsError>
where
    F: Fn(&[f64]) -> f64,
{
    let values: Vec<f64> = samples.iter().map(|s| psi(s)).collect();
    error_m(&values, reference)
}

/// √(E_q|x|²) − √(E_p|x|²): a lower bound on W(q, p) when positive. The sign
/// is returned as-is.
pub fn moment_lower_bound_w2(second_moment_q: f64, second_moment_p: f64) -> f64 {
    debug_assert!(second_moment_q >= 0.0 && second_moment_p >= 0.0);
    second_moment_q.sqrt() - second_moment_p.sqrt()
}
