//! Complex Schur eigendecomposition for small dense real matrices.
//!
//! Pipeline: complex Householder reduction to Hessenberg form, shifted QR
//! iteration with Givens rotations (Wilkinson shift, occasional exceptional
//! shift) accumulating the unitary similarity, then eigenvector extraction
//! by triangular back-substitution. Near-defective matrices are reported as
//! [`NumericsError::NotDiagonalizable`] via a smallest-singular-value
//! estimate of the eigenvector matrix.

use num_complex::Complex64;

use super::{Matrix, NumericsError};

/// Largest supported dimension; bigger inputs are rejected up front.
pub const EIGEN_DIM_CAP: usize = 64;

const MAX_STALL: usize = 60;

/// Eigenvalues, unit-norm eigenvectors, and conditioning summaries of the
/// eigenvector matrix `V`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    values: Vec<Complex64>,
    vectors: Vec<Vec<Complex64>>,
    v_norm_inf: f64,
    v_inv_norm_inf: f64,
    sigma_min_estimate: f64,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.values
    }

    /// Column eigenvector paired with `eigenvalues()[j]`, unit 2-norm.
    pub fn eigenvector(&self, j: usize) -> &[Complex64] {
        &self.vectors[j]
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }

    /// `κ∞(V) = ‖V‖∞ ‖V⁻¹‖∞`.
    pub fn kappa_inf(&self) -> f64 {
        self.v_norm_inf * self.v_inv_norm_inf
    }

    /// Lower estimate of the smallest singular value of `V`.
    pub fn sigma_min_estimate(&self) -> f64 {
        self.sigma_min_estimate
    }
}

/// Square complex matrix, row-major.
struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex64::ZERO; n * n] }
    }

    fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::ONE;
        }
        m
    }

    fn from_real(a: &Matrix) -> Self {
        let n = a.rows();
        let data = a.entries().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self { n, data }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .map(|z| z.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    fn norm_one(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Rotate rows `(i1, i2)`: `G = [[c, s], [-s̄, c]]` applied from the left.
    fn rotate_rows(&mut self, i1: usize, i2: usize, c: f64, s: Complex64, cols: std::ops::Range<usize>) {
        for j in cols {
            let x = self.get(i1, j);
            let y = self.get(i2, j);
            self.set(i1, j, c * x + s * y);
            self.set(i2, j, -s.conj() * x + c * y);
        }
    }

    /// Rotate columns `(j1, j2)`: `Gᴴ` applied from the right.
    fn rotate_cols(&mut self, j1: usize, j2: usize, c: f64, s: Complex64, rows: std::ops::Range<usize>) {
        for i in rows {
            let x = self.get(i, j1);
            let y = self.get(i, j2);
            self.set(i, j1, c * x + s.conj() * y);
            self.set(i, j2, -s * x + c * y);
        }
    }
}

/// Givens pair `(c, s)` with `c² + |s|² = 1` such that
/// `[[c, s], [-s̄, c]] [a; b] = [r; 0]`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::ZERO);
    }
    let an = a.norm();
    let t = an.hypot(bn);
    if an == 0.0 {
        (0.0, b.conj() / bn)
    } else {
        (an / t, (a / an) * b.conj() / t)
    }
}

/// Eigenvalue of the 2x2 block `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr_half = (a + d) * 0.5;
    let disc = ((a - d) * (a - d) * 0.25 + b * c).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex LU with partial pivoting; returns row sums and column sums of
/// the inverse, or `None` when a pivot vanishes.
fn inverse_norms(v: &CMatrix) -> Option<(f64, f64)> {
    let n = v.n;
    let mut lu = v.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut best, mut best_val) = (k, -1.0);
        for i in k..n {
            let mag = lu[perm[i] * n + k].norm();
            if mag > best_val {
                best_val = mag;
                best = i;
            }
        }
        if best_val < 1e-300 {
            return None;
        }
        perm.swap(k, best);
        let pk = perm[k];
        let pivot = lu[pk * n + k];
        for i in (k + 1)..n {
            let pi = perm[i];
            let factor = lu[pi * n + k] / pivot;
            lu[pi * n + k] = factor;
            for j in (k + 1)..n {
                let sub = factor * lu[pk * n + j];
                lu[pi * n + j] -= sub;
            }
        }
    }
    let solve = |b: &mut [Complex64]| {
        let mut y = vec![Complex64::ZERO; n];
        for i in 0..n {
            let pi = perm[i];
            let mut sum = b[pi];
            for j in 0..i {
                sum -= lu[pi * n + j] * y[j];
            }
            y[i] = sum;
        }
        for i in (0..n).rev() {
            let pi = perm[i];
            let mut sum = y[i];
            for j in (i + 1)..n {
                sum -= lu[pi * n + j] * b[j];
            }
            b[i] = sum / lu[pi * n + i];
        }
    };
    let mut row_sums = vec![0.0f64; n];
    let mut max_col_sum = 0.0f64;
    let mut col = vec![Complex64::ZERO; n];
    for j in 0..n {
        col.iter_mut().for_each(|z| *z = Complex64::ZERO);
        col[j] = Complex64::ONE;
        solve(&mut col);
        let mut col_sum = 0.0;
        for (i, z) in col.iter().enumerate() {
            let m = z.norm();
            row_sums[i] += m;
            col_sum += m;
        }
        max_col_sum = max_col_sum.max(col_sum);
    }
    let inf = row_sums.iter().cloned().fold(0.0, f64::max);
    Some((inf, max_col_sum))
}

/// Full eigendecomposition of a real square matrix of dimension at most 64.
///
/// Flags the matrix as `NotDiagonalizable` when the eigenvector matrix is
/// numerically singular (smallest-singular-value estimate below `tol`) or
/// when QR iteration fails to converge.
pub fn eigendecompose(a: &Matrix, tol: f64) -> Result<EigenDecomposition, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::DimensionMismatch("matrix not square".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Err(NumericsError::DomainError("empty matrix".into()));
    }
    if n > EIGEN_DIM_CAP {
        return Err(NumericsError::DomainError(format!(
            "dimension {n} exceeds eigendecomposition cap {EIGEN_DIM_CAP}"
        )));
    }

    let mut h = CMatrix::from_real(a);
    let mut u = CMatrix::identity(n);
    let h_scale = h.norm_inf().max(1.0);
    let eps = f64::EPSILON;

    // Householder reduction to upper Hessenberg form, accumulating U.
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut x = vec![Complex64::ZERO; len];
        for i in 0..len {
            x[i] = h.get(k + 1 + i, k);
        }
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm <= eps * h_scale {
            continue;
        }
        let alpha = if x[0].norm() == 0.0 {
            Complex64::new(-xnorm, 0.0)
        } else {
            -(x[0] / x[0].norm()) * xnorm
        };
        let mut v = x;
        v[0] -= alpha;
        let vnorm_sqr = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if vnorm_sqr <= 1e-300 {
            continue;
        }
        let beta = 2.0 / vnorm_sqr;
        // H <- P H
        for j in 0..n {
            let mut s = Complex64::ZERO;
            for i in 0..len {
                s += v[i].conj() * h.get(k + 1 + i, j);
            }
            s *= beta;
            for i in 0..len {
                let upd = s * v[i];
                let cur = h.get(k + 1 + i, j);
                h.set(k + 1 + i, j, cur - upd);
            }
        }
        // H <- H P and U <- U P
        for m in [&mut h, &mut u] {
            for r in 0..n {
                let mut s = Complex64::ZERO;
                for i in 0..len {
                    s += m.get(r, k + 1 + i) * v[i];
                }
                s *= beta;
                for i in 0..len {
                    let upd = s * v[i].conj();
                    let cur = m.get(r, k + 1 + i);
                    m.set(r, k + 1 + i, cur - upd);
                }
            }
        }
        h.set(k + 1, k, alpha);
        for i in (k + 2)..n {
            h.set(i, k, Complex64::ZERO);
        }
    }

    // Shifted QR with deflation.
    let negligible = |h: &CMatrix, row: usize| -> bool {
        let sub = h.get(row, row - 1).norm();
        let local = h.get(row - 1, row - 1).norm() + h.get(row, row).norm();
        sub <= eps * local.max(h_scale * 1e-30) || sub <= 1e-300
    };
    let mut hi = n - 1;
    let mut stall = 0usize;
    while hi > 0 {
        if negligible(&h, hi) {
            h.set(hi, hi - 1, Complex64::ZERO);
            hi -= 1;
            stall = 0;
            continue;
        }
        let mut lo = hi;
        while lo > 0 && !negligible(&h, lo) {
            lo -= 1;
        }
        if lo > 0 {
            h.set(lo, lo - 1, Complex64::ZERO);
        }
        stall += 1;
        if stall > MAX_STALL {
            return Err(NumericsError::NotDiagonalizable);
        }
        let shift = if stall % 10 == 0 {
            h.get(hi, hi) + Complex64::new(0.75 * h.get(hi, hi - 1).norm(), 0.0)
        } else {
            wilkinson_shift(
                h.get(hi - 1, hi - 1),
                h.get(hi - 1, hi),
                h.get(hi, hi - 1),
                h.get(hi, hi),
            )
        };
        // Implicit single-shift bulge chase over the window [lo, hi].
        let (c, s) = givens(h.get(lo, lo) - shift, h.get(lo + 1, lo));
        let col_start = lo.saturating_sub(1);
        h.rotate_rows(lo, lo + 1, c, s, col_start..n);
        h.rotate_cols(lo, lo + 1, c, s, 0..(lo + 2).min(hi) + 1);
        u.rotate_cols(lo, lo + 1, c, s, 0..n);
        for k in lo..hi.saturating_sub(1) {
            let (c, s) = givens(h.get(k + 1, k), h.get(k + 2, k));
            h.rotate_rows(k + 1, k + 2, c, s, k..n);
            h.set(k + 2, k, Complex64::ZERO);
            h.rotate_cols(k + 1, k + 2, c, s, 0..(k + 3).min(hi) + 1);
            u.rotate_cols(k + 1, k + 2, c, s, 0..n);
        }
    }

    let values: Vec<Complex64> = (0..n).map(|i| h.get(i, i)).collect();

    // Eigenvectors of the triangular factor by back-substitution, then map
    // through the accumulated unitary.
    let mut vectors = Vec::with_capacity(n);
    let den_floor = eps * h_scale;
    for i in 0..n {
        let lambda = values[i];
        let mut y = vec![Complex64::ZERO; i + 1];
        y[i] = Complex64::ONE;
        for j in (0..i).rev() {
            let mut s = Complex64::ZERO;
            for k in (j + 1)..=i {
                s += h.get(j, k) * y[k];
            }
            let mut den = h.get(j, j) - lambda;
            if den.norm() < den_floor {
                den = Complex64::new(den_floor, 0.0);
            }
            y[j] = -s / den;
            let mag = y[j].norm();
            if mag > 1e200 {
                for z in y.iter_mut() {
                    *z /= mag;
                }
            }
        }
        let mut v = vec![Complex64::ZERO; n];
        for (r, vr) in v.iter_mut().enumerate() {
            let mut acc = Complex64::ZERO;
            for (k, yk) in y.iter().enumerate() {
                acc += u.get(r, k) * *yk;
            }
            *vr = acc;
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            return Err(NumericsError::NotDiagonalizable);
        }
        for z in v.iter_mut() {
            *z /= norm;
        }
        vectors.push(v);
    }

    let mut vmat = CMatrix::zeros(n);
    for (j, col) in vectors.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            vmat.set(i, j, *z);
        }
    }
    let (inv_inf, inv_one) = inverse_norms(&vmat).ok_or(NumericsError::NotDiagonalizable)?;
    // σ_min(V) = 1/‖V⁻¹‖₂ and ‖V⁻¹‖₂ ≤ √(‖V⁻¹‖₁‖V⁻¹‖∞).
    let sigma_min_estimate = 1.0 / (inv_inf * inv_one).sqrt();
    if sigma_min_estimate < tol {
        return Err(NumericsError::NotDiagonalizable);
    }
    Ok(EigenDecomposition {
        values,
        vectors,
        v_norm_inf: vmat.norm_inf(),
        v_inv_norm_inf: inv_inf,
        sigma_min_estimate,
    })
}
