//! Dense complex matrices and Hermitian matrix algebra.
//!
//! Dimensions in this crate are small (a node's stacked MAC covariances are
//! at most a few dozen rows), so everything is stored densely in row-major
//! order and the eigensolver is a cyclic complex Jacobi iteration.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Eigenvalues above this (negated) bound are treated as zero in PSD checks.
pub const PSD_CLAMP: f64 = 1e-9;
/// Eigenvalues below the negation of this bound fail PSD validation.
pub const PSD_REJECT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from parallel real/imaginary row-major arrays.
    pub fn from_parts(rows: usize, cols: usize, re: &[T], im: &[T]) -> Result<Self> {
        if re.len() != rows * cols || im.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "real/imag arrays of length {}/{} for a {rows}x{cols} matrix",
                re.len(),
                im.len()
            )));
        }
        let data = re.iter().zip(im).map(|(&r, &i)| Complex::new(r, i)).collect();
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, re: &[T]) -> Result<Self> {
        let im = vec![T::zero(); re.len()];
        Self::from_parts(rows, cols, re, &im)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn real_parts(&self) -> Vec<T> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn imag_parts(&self) -> Vec<T> {
        self.data.iter().map(|z| z.im).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(self.matmul_unchecked(rhs))
    }

    pub(crate) fn matmul_unchecked(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * *b;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs_entry(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    fn add_assign_scaled(&mut self, other: &Self, s: T) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Square complex matrix equal to its conjugate transpose.
///
/// Every constructor symmetrizes its input as `(A + A†)/2`, so the stored
/// matrix is Hermitian up to rounding in the last bit.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T>(ComplexMatrix<T>);

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition<T> {
    /// Sorted non-increasing.
    pub eigenvalues: Vec<T>,
    /// Unitary; column `i` is the eigenvector of `eigenvalues[i]`.
    pub basis: ComplexMatrix<T>,
}

impl<T: Real> EigenDecomposition<T> {
    /// `U · diag(f(λ)) · U†`.
    pub fn reconstruct_with(&self, mut f: impl FnMut(T) -> T) -> HermitianMatrix<T> {
        let n = self.eigenvalues.len();
        let weights: Vec<T> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let u = &self.basis;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            for i in 0..n {
                let uik = u[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += uik * u[(j, k)].conj();
                }
            }
        }
        HermitianMatrix::from_matrix_unchecked(out)
    }

    pub fn reconstruct(&self) -> HermitianMatrix<T> {
        self.reconstruct_with(|l| l)
    }
}

impl<T: Real> HermitianMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        Self(ComplexMatrix::identity(n).scale(s))
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = ComplexMatrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        Self(m)
    }

    /// Symmetrizes a square matrix into a Hermitian one.
    pub fn from_matrix(m: ComplexMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    pub(crate) fn from_matrix_unchecked(mut m: ComplexMatrix<T>) -> Self {
        let n = m.rows();
        let half = T::lit(0.5);
        for i in 0..n {
            m[(i, i)].im = T::zero();
            for j in (i + 1)..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * half;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        Self(m)
    }

    /// Real symmetric matrix from a row-major real array.
    pub fn from_real(n: usize, re: &[T]) -> Result<Self> {
        Self::from_matrix(ComplexMatrix::from_real(n, n, re)?)
    }

    /// Block-diagonal matrix with the given diagonal blocks.
    pub fn block_diagonal(blocks: &[HermitianMatrix<T>]) -> Self {
        let n: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut m = ComplexMatrix::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            let d = b.dim();
            for i in 0..d {
                for j in 0..d {
                    m[(off + i, off + j)] = b.0[(i, j)];
                }
            }
            off += d;
        }
        Self(m)
    }

    /// Extracts the diagonal block starting at `offset` of size `dim`.
    pub fn diagonal_block(&self, offset: usize, dim: usize) -> Self {
        Self(ComplexMatrix::from_fn(dim, dim, |i, j| self.0[(offset + i, offset + j)]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.0
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// Real inner product `Re Tr(A† B)`.
    pub fn inner(&self, other: &Self) -> T {
        self.0.data.iter().zip(&other.0.data).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.0.frobenius_norm()
    }

    pub fn max_abs_entry(&self) -> T {
        self.0.max_abs_entry()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, -T::one())
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: T) -> Self {
        let mut out = self.0.clone();
        out.add_assign_scaled(&other.0, s);
        Self(out)
    }

    pub fn add_scaled_assign(&mut self, other: &Self, s: T) {
        self.0.add_assign_scaled(&other.0, s);
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.scale(s))
    }

    /// `s · B† A B`, the congruence used for MAC Gram terms.
    pub fn congruence(&self, b: &ComplexMatrix<T>, s: T) -> Self {
        let ab = self.0.matmul_unchecked(b);
        let m = b.adjoint().matmul_unchecked(&ab).scale(s);
        Self::from_matrix_unchecked(m)
    }

    /// `s · B A B†`.
    pub fn congruence_adjoint(&self, b: &ComplexMatrix<T>, s: T) -> Self {
        let bh = b.adjoint();
        let ab = self.0.matmul_unchecked(&bh);
        let m = b.matmul_unchecked(&ab).scale(s);
        Self::from_matrix_unchecked(m)
    }

    /// Eigendecomposition by cyclic complex Jacobi rotations.
    pub fn eigh(&self) -> EigenDecomposition<T> {
        jacobi_eigh(self)
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.eigh().eigenvalues
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues().last().copied().unwrap_or_else(T::zero)
    }

    /// `U (Λ)₊ U†`: the nearest PSD matrix in Frobenius norm.
    pub fn psd_clip(&self) -> Self {
        self.eigh().reconstruct_with(|l| l.max(T::zero()))
    }

    /// Cholesky factor `L` (lower triangular, real positive diagonal) with
    /// `A = L L†`. Returns `None` when the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<ComplexMatrix<T>> {
        let n = self.dim();
        let a = &self.0;
        let mut l = ComplexMatrix::<T>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex::new(djj, T::zero());
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(l)
    }

    /// Inverse of a Hermitian positive definite matrix via Cholesky.
    pub fn inverse_hpd(&self) -> Option<Self> {
        let n = self.dim();
        let l = self.cholesky()?;
        // Solve L Y = I, then L† X = Y.
        let mut y = ComplexMatrix::<T>::identity(n);
        for c in 0..n {
            for i in 0..n {
                let mut s = y[(i, c)];
                for k in 0..i {
                    s -= l[(i, k)] * y[(k, c)];
                }
                y[(i, c)] = s / l[(i, i)].re;
            }
            for i in (0..n).rev() {
                let mut s = y[(i, c)];
                for k in (i + 1)..n {
                    s -= l[(k, i)].conj() * y[(k, c)];
                }
                y[(i, c)] = s / l[(i, i)].re;
            }
        }
        Some(Self::from_matrix_unchecked(y))
    }

    /// `log₂ det A` for a Hermitian positive definite matrix via Cholesky.
    pub fn log2_det_hpd(&self) -> Option<T> {
        let l = self.cholesky()?;
        let s: T = (0..self.dim()).map(|i| l[(i, i)].re.ln()).sum();
        Some(s * T::lit(2.0) / T::LN_2())
    }
}

/// Eigendecomposition of a Hermitian matrix; rejects non-square input.
pub fn eigh<T: Real>(a: &ComplexMatrix<T>) -> Result<EigenDecomposition<T>> {
    Ok(HermitianMatrix::from_matrix(a.clone())?.eigh())
}

pub fn psd_clip<T: Real>(a: &HermitianMatrix<T>) -> HermitianMatrix<T> {
    a.psd_clip()
}

/// `‖A − B‖_F`.
pub fn frobenius_dist<T: Real>(a: &HermitianMatrix<T>, b: &HermitianMatrix<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok(a.sub(b).frobenius_norm())
}

/// `log₂|I + A| = Σ log₂(1 + λᵢ)` for PSD `A`.
///
/// Eigenvalues in `[-1e-6, 0)` are clamped to zero; anything more negative is
/// rejected.
pub fn logdet2_i_plus<T: Real>(a: &HermitianMatrix<T>) -> Result<T> {
    let eig = a.eigh();
    let reject = T::tol(PSD_REJECT) * (T::one() + a.frobenius_norm());
    if let Some(&min) = eig.eigenvalues.last() {
        if min < -reject {
            return Err(Error::NotPsd { min_eigenvalue: min.to_f64_lossy() });
        }
    }
    Ok(eig.eigenvalues.iter().map(|&l| (T::one() + l.max(T::zero())).log2()).sum())
}

fn jacobi_eigh<T: Real>(h: &HermitianMatrix<T>) -> EigenDecomposition<T> {
    let n = h.dim();
    let mut a = h.0.clone();
    let mut v = ComplexMatrix::<T>::identity(n);
    let norm = a.frobenius_norm();
    let threshold = T::tol(1e-12) * norm;
    let zero = T::zero();

    if norm > zero {
        for _ in 0..MAX_JACOBI_SWEEPS {
            let mut off_max = zero;
            for p in 0..n {
                for q in (p + 1)..n {
                    off_max = off_max.max(a[(p, q)].norm());
                }
            }
            if off_max <= threshold {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let mag = apq.norm();
                    if mag <= threshold * T::lit(1e-3) || mag == zero {
                        continue;
                    }
                    rotate(&mut a, &mut v, p, q, apq, mag);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let basis = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    EigenDecomposition { eigenvalues, basis }
}

/// Applies the unitary rotation `J` that annihilates `a[p][q]`:
/// `A ← J† A J`, `V ← V J`, where `J = diag(1, e^{-iφ})·R(θ)` on the `(p, q)` plane.
fn rotate<T: Real>(
    a: &mut ComplexMatrix<T>,
    v: &mut ComplexMatrix<T>,
    p: usize,
    q: usize,
    apq: Complex<T>,
    mag: T,
) {
    let n = a.rows();
    let one = T::one();
    let phase = apq / mag; // e^{iφ}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (T::lit(2.0) * mag);
    let t = if theta >= T::zero() {
        one / (theta + (theta * theta + one).sqrt())
    } else {
        -one / (-theta + (theta * theta + one).sqrt())
    };
    let c = one / (t * t + one).sqrt();
    let s = t * c;

    // J entries on the (p, q) plane.
    let jpp = Complex::new(c, T::zero());
    let jpq = Complex::new(s, T::zero());
    let jqp = phase.conj() * (-s);
    let jqq = phase.conj() * c;

    // A ← A J (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // A ← J† A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = Complex::new(T::zero(), T::zero());
    a[(q, p)] = Complex::new(T::zero(), T::zero());
    a[(p, p)].im = T::zero();
    a[(q, q)].im = T::zero();

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn herm(n: usize, entries: &[Complex<f64>]) -> HermitianMatrix<f64> {
        HermitianMatrix::from_matrix(ComplexMatrix::from_row_major(n, n, entries.to_vec()).unwrap())
            .unwrap()
    }

    fn assert_close(a: &HermitianMatrix<f64>, b: &HermitianMatrix<f64>, tol: f64) {
        let d = frobenius_dist(a, b).unwrap();
        assert!(d <= tol, "distance {d} > {tol}\n{a:?}\n{b:?}");
    }

    #[test]
    fn eigh_diagonal() {
        let e = HermitianMatrix::from_diagonal(&[3.0, 1.0]).eigh();
        assert_eq!(e.eigenvalues, vec![3.0, 1.0]);
        assert_eq!(e.basis, ComplexMatrix::identity(2));
    }

    #[test]
    fn eigh_identity() {
        for n in 1..6 {
            let e = HermitianMatrix::<f64>::identity(n).eigh();
            assert!(e.eigenvalues.iter().all(|&l| l == 1.0));
        }
    }

    #[test]
    fn eigh_complex_two_by_two() {
        // λ² − 4λ + 3 = 0
        let a = herm(2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let e = a.eigh();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert_close(&e.reconstruct(), &a, 1e-12);
    }

    #[test]
    fn eigh_rejects_non_square() {
        let m = ComplexMatrix::<f64>::zeros(2, 3);
        assert!(matches!(eigh(&m), Err(Error::Dimension(_))));
    }

    #[test]
    fn psd_clip_examples() {
        let a = HermitianMatrix::from_diagonal(&[4.0, -2.0]);
        assert_close(&a.psd_clip(), &HermitianMatrix::from_diagonal(&[4.0, 0.0]), 1e-12);

        let psd = herm(2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        assert_close(&psd.psd_clip(), &psd, 1e-9);

        let swap = HermitianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let half = HermitianMatrix::from_real(2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert_close(&swap.psd_clip(), &half, 1e-12);
    }

    #[test]
    fn frobenius_examples() {
        let a = HermitianMatrix::from_diagonal(&[1.0, 2.0]);
        assert_eq!(frobenius_dist(&a, &a).unwrap(), 0.0);
        let one = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        let zero = HermitianMatrix::<f64>::zeros(2);
        assert_eq!(frobenius_dist(&one, &zero).unwrap(), 1.0);
        let i2 = HermitianMatrix::<f64>::identity(2);
        let d = frobenius_dist(&i2, &i2.scale(-1.0)).unwrap();
        assert!((d - 8f64.sqrt()).abs() < 1e-15);
        assert!(frobenius_dist(&i2, &HermitianMatrix::identity(3)).is_err());
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet2_i_plus(&HermitianMatrix::<f64>::zeros(3)).unwrap(), 0.0);
        let v = logdet2_i_plus(&HermitianMatrix::<f64>::from_diagonal(&[1.0, 3.0])).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
        let v = logdet2_i_plus(&HermitianMatrix::<f64>::from_diagonal(&[3.0])).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn logdet_rejects_negative_and_clamps_tiny() {
        let bad = HermitianMatrix::from_diagonal(&[1.0, -0.1]);
        assert!(matches!(logdet2_i_plus(&bad), Err(Error::NotPsd { .. })));
        let tiny = HermitianMatrix::<f64>::from_diagonal(&[1.0, -1e-10]);
        assert!((logdet2_i_plus(&tiny).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_inverse_and_logdet() {
        let a = herm(2, &[c(3.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(2.0, 0.0)]);
        let inv = a.inverse_hpd().unwrap();
        let prod = a.as_matrix().matmul(inv.as_matrix()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - c(expect, 0.0)).norm() < 1e-14);
            }
        }
        // det = 6 − 2 = 4
        assert!((a.log2_det_hpd().unwrap() - 2.0).abs() < 1e-14);
        assert!(HermitianMatrix::from_diagonal(&[1.0, -1.0]).cholesky().is_none());
    }

    #[test]
    fn works_in_single_precision() {
        let a = HermitianMatrix::<f32>::from_real(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = a.eigh();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-5);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-5);
    }
}
