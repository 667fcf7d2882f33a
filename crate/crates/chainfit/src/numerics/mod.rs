//! Dense small-matrix linear algebra and statistical special functions.
//!
//! Everything here is sized for chains with at most a few hundred transient
//! states: plain row-major storage, scaled partial-pivot elimination, a
//! complex Schur eigensolver capped at dimension 64, and the handful of
//! special functions the statistics layers need. No domain semantics.
//!
//! All operations are pure functions of their value inputs.

mod eigen;
mod ks;
mod special;

pub use eigen::{eigendecompose, EigenDecomposition, EIGEN_DIM_CAP};
pub use ks::{kolmogorov_tail, ks_two_sample};
pub use special::{beta_quantile, ln_gamma, regularized_incomplete_beta, standard_normal_cdf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pivot magnitude (after row scaling) below which elimination reports a
/// singular matrix.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Default relative-change tolerance for power iteration.
pub const POWER_ITERATION_TOL: f64 = 1e-10;

/// Default iteration cap for power iteration.
pub const POWER_ITERATION_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular within pivot tolerance")]
    SingularMatrix,
    #[error("no convergence within {0} iterations")]
    NoConvergence(usize),
    #[error("matrix is defective or near-defective: no numerically stable eigenbasis")]
    NotDiagonalizable,
    #[error("argument outside function domain: {0}")]
    DomainError(String),
    #[error("sample is empty")]
    EmptySample,
}

/// Dense row-major matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build from row-major entries, rejecting NaN/Inf and shape mismatches.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| NumericsError::DimensionMismatch("rows*cols overflows".into()))?;
        if data.len() != expected {
            return Err(NumericsError::DimensionMismatch(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                expected,
                rows,
                cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(NumericsError::DimensionMismatch("ragged rows".into()));
        }
        Matrix::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    /// `A x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ A` for a row vector `x`.
    pub fn vecmat(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "vecmat dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, &a) in self.row(i).iter().enumerate() {
                out[j] += xi * a;
            }
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `A + c I` (square only).
    pub fn add_scaled_identity(&self, c: f64) -> Matrix {
        assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            out.data[i * self.cols + i] += c;
        }
        out
    }

    /// `A + c B`.
    pub fn add_scaled(&self, other: &Matrix, c: f64) -> Result<Matrix, NumericsError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumericsError::DimensionMismatch(
                "matrix addition shape mismatch".into(),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + c * b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }
}

/// LU factorization with scaled partial pivoting, reusable across many
/// right-hand sides.
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factor a square matrix. Fails with `SingularMatrix` when a scaled
    /// pivot magnitude drops below [`PIVOT_TOLERANCE`].
    pub fn factor(a: &Matrix) -> Result<Self, NumericsError> {
        if !a.is_square() {
            return Err(NumericsError::DimensionMismatch("matrix not square".into()));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut scale = vec![0.0; n];
        for i in 0..n {
            let s = a.row(i).iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if s == 0.0 {
                return Err(NumericsError::SingularMatrix);
            }
            scale[i] = s;
        }
        for k in 0..n {
            // pivot row maximizing the scaled column magnitude
            let (mut best, mut best_val) = (k, -1.0);
            for i in k..n {
                let v = lu[perm[i] * n + k].abs() / scale[perm[i]];
                if v > best_val {
                    best_val = v;
                    best = i;
                }
            }
            if best_val < PIVOT_TOLERANCE {
                return Err(NumericsError::SingularMatrix);
            }
            perm.swap(k, best);
            let pk = perm[k];
            let pivot = lu[pk * n + k];
            for i in (k + 1)..n {
                let pi = perm[i];
                let factor = lu[pi * n + k] / pivot;
                lu[pi * n + k] = factor;
                for j in (k + 1)..n {
                    lu[pi * n + j] -= factor * lu[pk * n + j];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    /// Solve `A x = b` using the stored factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if b.len() != self.n {
            return Err(NumericsError::DimensionMismatch(
                "right-hand side length mismatch".into(),
            ));
        }
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let pi = self.perm[i];
            let mut sum = b[pi];
            for j in 0..i {
                sum -= self.lu[pi * n + j] * y[j];
            }
            y[i] = sum;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let pi = self.perm[i];
            let mut sum = y[i];
            for j in (i + 1)..n {
                sum -= self.lu[pi * n + j] * x[j];
            }
            x[i] = sum / self.lu[pi * n + i];
        }
        Ok(x)
    }

    /// `‖A⁻¹‖∞` computed column by column.
    pub fn inverse_norm_inf(&self) -> Result<f64, NumericsError> {
        let n = self.n;
        let mut row_sums = vec![0.0; n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e)?;
            e[j] = 0.0;
            for (rs, c) in row_sums.iter_mut().zip(&col) {
                *rs += c.abs();
            }
        }
        Ok(row_sums.iter().cloned().fold(0.0, f64::max))
    }
}

/// Solve `A x = b` by scaled partial-pivot Gaussian elimination.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    LuFactors::factor(a)?.solve(b)
}

/// Estimate the spectral radius of a nonnegative matrix by power iteration.
///
/// Iterates on the shifted matrix `A + I` (same Perron vector, spectral
/// radius shifted by one) so that period-2 structures such as
/// `[[0, a], [b, 0]]` still converge. Stops when the successive estimate's
/// relative change drops below `tol`.
pub fn power_iteration_spectral_radius(
    a: &Matrix,
    tol: f64,
    max_iter: usize,
) -> Result<f64, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::DimensionMismatch("matrix not square".into()));
    }
    debug_assert!(
        a.entries().iter().all(|&x| x >= 0.0),
        "power iteration expects nonnegative entries"
    );
    let n = a.rows;
    if n == 0 {
        return Ok(0.0);
    }
    let shifted = a.add_scaled_identity(1.0);
    let mut v = vec![1.0; n];
    let mut lambda = 0.0f64;
    for _ in 0..max_iter {
        let w = shifted.matvec(&v);
        let norm = w.iter().cloned().fold(0.0f64, f64::max);
        if norm == 0.0 {
            return Ok(0.0);
        }
        let rel = (norm - lambda).abs() / norm.max(1e-300);
        lambda = norm;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        if rel < tol {
            return Ok((lambda - 1.0).max(0.0));
        }
    }
    Err(NumericsError::NoConvergence(max_iter))
}
