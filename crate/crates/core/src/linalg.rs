//! Minimal complex dense linear algebra: a row-major matrix, the few
//! vector kernels the detectors need, and a Hermitian positive-definite
//! Cholesky solver. Hand-rolled so that every arithmetic operation can be
//! charged to a [`FlopLedger`] explicitly.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::flops::FlopLedger;
use crate::scalar::Scalar;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex::new(T::one(), T::zero()));
        }
        m
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
    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `A x`.
    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, x.len());
        let mut y = vec![Complex::new(T::zero(), T::zero()); self.rows];
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = Complex::new(T::zero(), T::zero());
            for (a, b) in row.iter().zip(x.iter()) {
                acc = acc + *a * *b;
            }
            y[r] = acc;
        }
        y
    }

    /// `A^H x` without materializing the conjugate transpose.
    pub fn herm_matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.rows, x.len());
        let mut y = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            let xr = x[r];
            for (c, a) in row.iter().enumerate() {
                y[c] = y[c] + a.conj() * xr;
            }
        }
        y
    }
}

/// `‖v‖²`.
pub fn norm_sqr<T: Scalar>(v: &[Complex<T>]) -> T {
    let mut acc = T::zero();
    for z in v {
        acc += z.norm_sqr();
    }
    acc
}

/// `a^H b`.
pub fn hdot<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    assert_eq!(a.len(), b.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (x, y) in a.iter().zip(b.iter()) {
        acc = acc + x.conj() * *y;
    }
    acc
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor<T> {
    l: CMat<T>,
}

/// Factors `A = L L^H`. Fails with [`Error::SingularMatrix`] when a pivot
/// falls below a small multiple of machine epsilon relative to the original
/// diagonal, which covers rank-deficient Gram matrices whose exact pivot of
/// zero rounds either way.
pub fn cholesky<T: Scalar>(a: &CMat<T>, ledger: &mut FlopLedger) -> Result<CholeskyFactor<T>> {
    assert_eq!(a.rows(), a.cols(), "cholesky needs a square matrix");
    let n = a.rows();
    let eps_factor = T::epsilon() * T::from(64.0).expect("constant");
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let diag = a.get(j, j).re;
        let mut pivot = diag;
        for k in 0..j {
            pivot -= l.get(j, k).norm_sqr();
        }
        ledger.norm_sqr(j as u64);
        ledger.radd(j as u64);
        ledger.rcmp(1);
        // NaN pivots fail both comparisons; +inf diagonals (infinite
        // regularization) are accepted.
        if !(pivot > diag * eps_factor) && pivot != T::infinity() {
            return Err(Error::SingularMatrix);
        }
        let ljj = pivot.sqrt();
        ledger.sqrt(1);
        l.set(j, j, Complex::new(ljj, T::zero()));
        for i in (j + 1)..n {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc = acc - l.get(i, k) * l.get(j, k).conj();
            }
            ledger.cmul(j as u64);
            ledger.cadd(j as u64);
            ledger.rdiv(2);
            l.set(i, j, Complex::new(acc.re / ljj, acc.im / ljj));
        }
    }
    Ok(CholeskyFactor { l })
}

impl<T: Scalar> CholeskyFactor<T> {
    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Forward substitution `L v = b`.
    pub fn forward(&self, b: &[Complex<T>], ledger: &mut FlopLedger) -> Vec<Complex<T>> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut v = vec![Complex::new(T::zero(), T::zero()); n];
        for i in 0..n {
            let mut acc = b[i];
            for k in 0..i {
                acc = acc - self.l.get(i, k) * v[k];
            }
            ledger.cmul(i as u64);
            ledger.cadd(i as u64);
            ledger.rdiv(2);
            let d = self.l.get(i, i).re;
            v[i] = Complex::new(acc.re / d, acc.im / d);
        }
        v
    }

    /// Back substitution `L^H x = v`.
    pub fn backward(&self, v: &[Complex<T>], ledger: &mut FlopLedger) -> Vec<Complex<T>> {
        let n = self.dim();
        assert_eq!(v.len(), n);
        let mut x = vec![Complex::new(T::zero(), T::zero()); n];
        for i in (0..n).rev() {
            let mut acc = v[i];
            for k in (i + 1)..n {
                acc = acc - self.l.get(k, i).conj() * x[k];
            }
            ledger.cmul((n - 1 - i) as u64);
            ledger.cadd((n - 1 - i) as u64);
            ledger.rdiv(2);
            let d = self.l.get(i, i).re;
            x[i] = Complex::new(acc.re / d, acc.im / d);
        }
        x
    }

    /// Solves `A x = b` given the factorization of `A`.
    pub fn solve(&self, b: &[Complex<T>], ledger: &mut FlopLedger) -> Vec<Complex<T>> {
        let v = self.forward(b, ledger);
        self.backward(&v, ledger)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matvec_and_herm_matvec() {
        // H = [[1, i], [2, 0]], x = [1, 1-i]
        let h = CMat::from_vec(
            2,
            2,
            vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(0.0, 0.0)],
        );
        let x = vec![c(1.0, 0.0), c(1.0, -1.0)];
        let y = h.matvec(&x);
        assert_eq!(y[0], c(1.0, 0.0) + c(0.0, 1.0) * c(1.0, -1.0));
        assert_eq!(y[1], c(2.0, 0.0));

        let z = h.herm_matvec(&y);
        let expect0 = c(1.0, 0.0).conj() * y[0] + c(2.0, 0.0).conj() * y[1];
        assert!((z[0] - expect0).norm() < 1e-14);
        let expect1 = c(0.0, 1.0).conj() * y[0] + c(0.0, 0.0).conj() * y[1];
        assert!((z[1] - expect1).norm() < 1e-14);
    }

    #[test]
    fn cholesky_solves_hpd_system() {
        // A = B^H B + I with B random-ish fixed values: Hermitian PD.
        let b = CMat::from_vec(
            3,
            3,
            vec![
                c(0.6, -0.2),
                c(1.1, 0.4),
                c(-0.3, 0.9),
                c(0.2, 0.0),
                c(-0.5, 0.7),
                c(0.8, -0.1),
                c(1.3, 0.5),
                c(0.0, -0.6),
                c(0.4, 0.3),
            ],
        );
        let mut a = CMat::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
                for k in 0..3 {
                    acc += b.get(k, i).conj() * b.get(k, j);
                }
                a.set(i, j, acc);
            }
        }
        let rhs = vec![c(1.0, 2.0), c(-0.5, 0.25), c(0.75, -1.5)];
        let mut ledger = FlopLedger::new();
        let f = cholesky(&a, &mut ledger).unwrap();
        let x = f.solve(&rhs, &mut ledger);
        let ax = a.matvec(&x);
        for (lhs, want) in ax.iter().zip(rhs.iter()) {
            assert!((lhs - want).norm() < 1e-10);
        }
        assert!(ledger.flops() > 0);
    }

    #[test]
    fn cholesky_rejects_singular() {
        // Rank-1 Hermitian matrix.
        let a = CMat::from_vec(
            2,
            2,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)],
        );
        let mut ledger = FlopLedger::new();
        assert!(matches!(
            cholesky(&a, &mut ledger),
            Err(Error::SingularMatrix)
        ));
    }
}
