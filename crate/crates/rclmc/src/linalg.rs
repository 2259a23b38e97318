//! Small dense linear algebra: cyclic Jacobi eigendecomposition, PSD square
//! roots, and Cholesky factors for the matrix sizes this crate works with
//! (tens to a few hundreds).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {dev:e}")]
    NotSymmetric { i: usize, j: usize, dev: f64 },
    #[error("matrix is not positive definite: eigenvalue {value:e} at index {index}")]
    NotPositiveDefinite { index: usize, value: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("Cholesky failed at pivot {index}: {value:e}")]
    CholeskyPivot { index: usize, value: f64 },
}

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMat {
    n: usize,
    a: Vec<f64>,
}

impl SquareMat {
    pub fn zeros(n: usize) -> Self {
        SquareMat { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(LinalgError::NotSquare { rows: n, cols: r.len() });
            }
        }
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            a.extend_from_slice(r);
        }
        Ok(SquareMat { n, a })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let row = self.row(i);
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul(&self, other: &SquareMat) -> SquareMat {
        let n = self.n;
        let mut out = SquareMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    /// AᵀA, always exactly symmetric by construction.
    pub fn gram(&self) -> SquareMat {
        let n = self.n;
        let mut out = SquareMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.get(k, i) * self.get(k, j);
                }
                out.set(i, j, s);
                out.set(j, i, s);
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest absolute asymmetry |a_ij - a_ji|.
    pub fn symmetry_deviation(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0_f64);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let dev = (self.get(i, j) - self.get(j, i)).abs();
                if dev > worst.2 {
                    worst = (i, j, dev);
                }
            }
        }
        worst
    }

    pub fn check_symmetric(&self, tol: f64) -> Result<(), LinalgError> {
        let (i, j, dev) = self.symmetry_deviation();
        let scale = 1.0 + self.max_abs();
        if dev > tol * scale {
            return Err(LinalgError::NotSymmetric { i, j, dev });
        }
        Ok(())
    }

    fn off_diag_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    let v = self.get(i, j);
                    s += v * v;
                }
            }
        }
        s.sqrt()
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the same order as `values`.
    pub vectors: SquareMat,
}

/// Cyclic Jacobi iteration. Sweeps rotate every off-diagonal pair until the
/// off-diagonal Frobenius norm drops below `1e-12 * (1 + ||A||_F)`.
pub fn jacobi_eigen(matrix: &SquareMat) -> Result<SymEigen, LinalgError> {
    matrix.check_symmetric(1e-9)?;
    let n = matrix.dim();
    let mut a = matrix.clone();
    // Enforce exact symmetry so rotations stay consistent.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    let mut v = SquareMat::identity(n);
    let tol = 1e-12 * (1.0 + a.frobenius());
    const MAX_SWEEPS: usize = 100;

    for _ in 0..MAX_SWEEPS {
        let off = a.off_diag_norm();
        if off <= tol {
            return Ok(sorted_eigen(a, v));
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // Smaller root of t^2 + 2 t theta - 1 = 0 for stability.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    let off = a.off_diag_norm();
    if off <= tol {
        Ok(sorted_eigen(a, v))
    } else {
        Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS, off })
    }
}

fn rotate(a: &mut SquareMat, v: &mut SquareMat, p: usize, q: usize, c: f64, s: f64) {
    let n = a.dim();
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

fn sorted_eigen(a: SquareMat, v: SquareMat) -> SymEigen {
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap());
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = SquareMat::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, new_col, v.get(row, old_col));
        }
    }
    SymEigen { values, vectors }
}

/// Symmetric PSD square root via eigendecomposition; eigenvalues below zero
/// are clamped to zero.
pub fn sqrt_psd(matrix: &SquareMat) -> Result<SquareMat, LinalgError> {
    let eig = jacobi_eigen(matrix)?;
    let n = matrix.dim();
    let roots: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    // Q sqrt(Λ) Qᵀ, filled symmetrically.
    let mut out = SquareMat::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for k in 0..n {
                s += eig.vectors.get(i, k) * roots[k] * eig.vectors.get(j, k);
            }
            out.set(i, j, s);
            out.set(j, i, s);
        }
    }
    Ok(out)
}

/// Lower-triangular Cholesky factor L with A = LLᵀ.
pub fn cholesky(matrix: &SquareMat) -> Result<SquareMat, LinalgError> {
    matrix.check_symmetric(1e-9)?;
    let n = matrix.dim();
    let mut l = SquareMat::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = matrix.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= 0.0 {
                    return Err(LinalgError::CholeskyPivot { index: i, value: s });
                }
                l.set(i, j, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solve Lᵀ x = b for lower-triangular L (back substitution).
pub fn solve_lower_transpose(l: &SquareMat, b: &[f64]) -> Vec<f64> {
    let n = l.dim();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// Inverse of an SPD matrix through its eigendecomposition.
pub fn inverse_spd(matrix: &SquareMat) -> Result<SquareMat, LinalgError> {
    let eig = jacobi_eigen(matrix)?;
    let n = matrix.dim();
    for (idx, &l) in eig.values.iter().enumerate() {
        if l <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite { index: idx, value: l });
        }
    }
    let mut out = SquareMat::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for k in 0..n {
                s += eig.vectors.get(i, k) / eig.values[k] * eig.vectors.get(j, k);
            }
            out.set(i, j, s);
            out.set(j, i, s);
        }
    }
    Ok(out)
}
