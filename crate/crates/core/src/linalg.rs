//! Dense complex matrices over a generic real field.
//!
//! Bipartite operators on `A ⊗ B` use the row-major Kronecker index
//! `i = a * d_b + b`, so `X ⊗ Y` places `A` as the slow factor.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which tensor factor of a bipartite operator an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    data: DMatrix<Complex<T>>,
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: DMatrix::from_element(rows, cols, Complex::new(T::zero(), T::zero())),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        Self {
            data: DMatrix::from_fn(rows, cols, f),
        }
    }

    /// Builds from row-major entries; rejects non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex<T>]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape("matrix must be non-empty".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let m = Self::from_fn(rows, cols, |i, j| entries[i * cols + j]);
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::InvalidShape("ragged rows".into()));
            }
            entries.extend(row.iter().map(|&x| Complex::new(T::lit(x), T::zero())));
        }
        Self::from_row_major(r, c, &entries)
    }

    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(values[i], T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
    }

    /// `|v⟩⟨v|` for a column vector `v`.
    pub fn outer(v: &[Complex<T>]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    pub fn from_dmatrix(data: DMatrix<Complex<T>>) -> Self {
        Self { data }
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex<T>> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex<T>> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[(i, j)] = v;
    }

    /// Row-major copy of the entries.
    pub fn entries(&self) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn dagger(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            data: self.data.map(|z| z.conj()),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        self.data.trace()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            data: self.data.map(|z| z * s),
        }
    }

    pub fn scale_c(&self, s: Complex<T>) -> Self {
        Self {
            data: self.data.map(|z| z * s),
        }
    }

    /// `tr(self · other)`; cheaper than forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..self.rows() {
            for k in 0..self.cols() {
                acc += self.data[(i, k)] * other.data[(k, i)];
            }
        }
        acc
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            data: self.data.kronecker(&other.data),
        }
    }

    /// `A · self · A†`.
    pub fn conjugate_by(&self, a: &Self) -> Self {
        Self {
            data: &a.data * &self.data * a.data.adjoint(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(nalgebra::ComplexField::modulus(*z)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.data.shape(), other.data.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(T::zero(), |m, (a, b)| m.max(nalgebra::ComplexField::modulus(*a - *b)))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && self.max_abs_diff(&self.dagger()) <= tol
    }

    pub fn hermitian_part(&self) -> Self {
        (self + &self.dagger()).scale(T::lit(0.5))
    }

    /// Eigendecomposition of the Hermitian part, eigenvalues ascending.
    pub fn eigh(&self) -> HermitianEigen<T> {
        let h = self.hermitian_part();
        let eig = SymmetricEigen::new(h.data);
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = Self::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        HermitianEigen { values, vectors }
    }

    pub fn eigenvalues_h(&self) -> Vec<T> {
        self.eigh().values
    }

    pub fn min_eigenvalue_h(&self) -> T {
        self.eigh().values[0]
    }

    pub fn max_eigenvalue_h(&self) -> T {
        *self.eigh().values.last().expect("non-empty matrix")
    }

    /// Applies `f` to the spectrum of the Hermitian part.
    pub fn spectral_map(&self, f: impl Fn(T) -> T) -> Self {
        let HermitianEigen { values, vectors } = self.eigh();
        let mapped: Vec<T> = values.into_iter().map(f).collect();
        Self::diag(&mapped).conjugate_by(&vectors)
    }

    /// Square root of the PSD part (negative eigenvalues clipped to zero).
    pub fn sqrt_psd(&self) -> Self {
        self.spectral_map(|x| if x > T::zero() { x.sqrt() } else { T::zero() })
    }

    /// Clips negative eigenvalues to zero.
    pub fn psd_part(&self) -> Self {
        self.spectral_map(|x| x.max(T::zero()))
    }

    /// Schatten-1 norm of a Hermitian matrix.
    pub fn trace_norm_h(&self) -> T {
        self.eigh().values.iter().fold(T::zero(), |acc, v| acc + v.abs())
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> T {
        let svd = self.data.clone().svd(false, false);
        svd.singular_values.iter().fold(T::zero(), |m, s| m.max(*s))
    }

    fn factor_check(&self, d_a: usize, d_b: usize) -> Result<()> {
        if !self.is_square() || d_a == 0 || d_b == 0 || self.rows() != d_a * d_b {
            return Err(Error::InvalidShape(format!(
                "{}x{} matrix does not factor as {d_a}*{d_b}",
                self.rows(),
                self.cols()
            )));
        }
        Ok(())
    }

    /// Traces out `subsystem` of an operator on `A ⊗ B`.
    pub fn partial_trace(&self, d_a: usize, d_b: usize, subsystem: Subsystem) -> Result<Self> {
        self.factor_check(d_a, d_b)?;
        let zero = Complex::new(T::zero(), T::zero());
        Ok(match subsystem {
            Subsystem::A => Self::from_fn(d_b, d_b, |b1, b2| {
                (0..d_a).fold(zero, |acc, a| acc + self.data[(a * d_b + b1, a * d_b + b2)])
            }),
            Subsystem::B => Self::from_fn(d_a, d_a, |a1, a2| {
                (0..d_b).fold(zero, |acc, b| acc + self.data[(a1 * d_b + b, a2 * d_b + b)])
            }),
        })
    }

    /// Transposes `subsystem` of an operator on `A ⊗ B`.
    pub fn partial_transpose(&self, d_a: usize, d_b: usize, subsystem: Subsystem) -> Result<Self> {
        self.factor_check(d_a, d_b)?;
        Ok(Self::from_fn(d_a * d_b, d_a * d_b, |r, c| {
            let (a1, b1) = (r / d_b, r % d_b);
            let (a2, b2) = (c / d_b, c % d_b);
            match subsystem {
                Subsystem::A => self.data[(a2 * d_b + b1, a1 * d_b + b2)],
                Subsystem::B => self.data[(a1 * d_b + b2, a2 * d_b + b1)],
            }
        }))
    }

    /// Converts the scalar field, e.g. `f64 → f32`.
    pub fn cast<U: Real>(&self) -> ComplexMatrix<U> {
        ComplexMatrix {
            data: self
                .data
                .map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()))),
        }
    }
}

impl<T: Real> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.data[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re.as_f64(), z.im.as_f64())?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix {
            data: &self.data * &rhs.data,
        }
    }
}

impl<T: Real> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn neg(self) -> ComplexMatrix<T> {
        ComplexMatrix { data: -&self.data }
    }
}

impl<T: Real> AddAssign<&ComplexMatrix<T>> for ComplexMatrix<T> {
    fn add_assign(&mut self, rhs: &ComplexMatrix<T>) {
        self.data += &rhs.data;
    }
}

// JSON layout: nested rows, each entry a `[re, im]` pair.
impl<T: Real> Serialize for ComplexMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows()))?;
        for i in 0..self.rows() {
            let row: Vec<[T; 2]> = (0..self.cols())
                .map(|j| [self.data[(i, j)].re, self.data[(i, j)].im])
                .collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

impl<'de, T: Real> Deserialize<'de> for ComplexMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[T; 2]>> = Vec::deserialize(deserializer)?;
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(de::Error::custom("ragged matrix rows"));
            }
            entries.extend(row.iter().map(|[re, im]| Complex::new(*re, *im)));
        }
        ComplexMatrix::from_row_major(r, c, &entries).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = ComplexMatrix<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn partial_trace_of_product_is_scaled_factor() {
        let x = M::from_row_major(2, 2, &[c(1.0, 0.0), c(0.5, -0.2), c(0.5, 0.2), c(2.0, 0.0)]).unwrap();
        let y = M::from_row_major(
            3,
            3,
            &[
                c(0.3, 0.0),
                c(0.0, 0.1),
                c(0.0, 0.0),
                c(0.0, -0.1),
                c(0.5, 0.0),
                c(0.1, 0.0),
                c(0.0, 0.0),
                c(0.1, 0.0),
                c(0.7, 0.0),
            ],
        )
        .unwrap();
        let xy = x.kron(&y);
        let tr_b = xy.partial_trace(2, 3, Subsystem::B).unwrap();
        assert!(tr_b.max_abs_diff(&x.scale_c(y.trace())) < 1e-14);
        let tr_a = xy.partial_trace(2, 3, Subsystem::A).unwrap();
        assert!(tr_a.max_abs_diff(&y.scale_c(x.trace())) < 1e-14);
        assert!((tr_a.trace() - xy.trace()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_rejects_bad_factorization() {
        let m = M::identity(6);
        assert!(matches!(m.partial_trace(4, 2, Subsystem::A), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn partial_transpose_of_product() {
        let x = M::from_row_major(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let y = M::from_row_major(2, 2, &[c(0.0, 0.0), c(1.0, 1.0), c(-1.0, 0.0), c(4.0, 0.0)]).unwrap();
        let pt = x.kron(&y).partial_transpose(2, 2, Subsystem::B).unwrap();
        assert!(pt.max_abs_diff(&x.kron(&y.transpose())) < 1e-15);
        let pt = x.kron(&y).partial_transpose(2, 2, Subsystem::A).unwrap();
        assert!(pt.max_abs_diff(&x.transpose().kron(&y)) < 1e-15);
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let a = M::from_row_major(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]).unwrap();
        let s = a.sqrt_psd();
        assert!((&s * &s).max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let a = M::from_row_major(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let e = a.eigh();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let back = M::diag(&e.values).conjugate_by(&e.vectors);
        assert!(back.max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            M::from_row_major(1, 1, &[c(f64::NAN, 0.0)]).unwrap_err(),
            Error::NonFinite
        );
        assert!(M::from_row_major(2, 2, &[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn json_layout_is_nested_pairs() {
        let m = M::from_row_major(1, 2, &[c(1.0, -2.0), c(0.5, 0.0)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[[1.0,-2.0],[0.5,0.0]]]");
        let back: M = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<M>("[[[1.0,0.0]],[]]").is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let a = ComplexMatrix::<f32>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let e = a.eigh();
        assert!((e.values[0] - 1.0).abs() < 1e-5 && (e.values[1] - 3.0).abs() < 1e-5);
    }
}
