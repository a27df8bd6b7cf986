use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::Real;
use crate::tol::Tolerances;

/// Density operator: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct QState<T: Real> {
    dim: usize,
    mat: ComplexMatrix<T>,
}

impl<T: Real> QState<T> {
    pub fn new(mat: ComplexMatrix<T>, tol: &Tolerances) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidShape("state must be square".into()));
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite);
        }
        if !mat.is_hermitian(T::lit(tol.herm)) {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let min = mat.min_eigenvalue_h();
        if min < -T::lit(tol.psd) {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                min.as_f64()
            )));
        }
        let tr = mat.trace();
        if (tr.re - T::one()).abs() > T::lit(tol.tp) || tr.im.abs() > T::lit(tol.tp) {
            return Err(Error::InvalidState(format!("trace {}", tr.re.as_f64())));
        }
        Ok(Self {
            dim: mat.rows(),
            mat,
        })
    }

    /// Wraps a matrix already known to be a state (internal constructions).
    pub(crate) fn from_matrix_unchecked(mat: ComplexMatrix<T>) -> Self {
        Self {
            dim: mat.rows(),
            mat,
        }
    }

    pub fn pure(psi: &[Complex<T>]) -> Result<Self> {
        let norm = psi.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if psi.is_empty() || norm <= T::zero() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v: Vec<Complex<T>> = psi.iter().map(|z| *z / norm).collect();
        Ok(Self::from_matrix_unchecked(ComplexMatrix::outer(&v)))
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("dimension must be positive".into()));
        }
        Ok(Self::from_matrix_unchecked(
            ComplexMatrix::identity(d).scale(T::one() / T::lit(d as f64)),
        ))
    }

    /// `|Φ⁺⟩⟨Φ⁺|` with `|Φ⁺⟩ = Σ_n |nn⟩ / √d`.
    pub fn max_entangled(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!(
                "maximally entangled state needs d >= 2, got {d}"
            )));
        }
        Ok(Self::from_matrix_unchecked(max_entangled_projector(d)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.mat
    }

    pub fn purity(&self) -> T {
        self.mat.trace_product(&self.mat).re
    }
}

/// Unit-trace projector onto `|Φ⁺⟩` as a plain matrix.
pub fn max_entangled_projector<T: Real>(d: usize) -> ComplexMatrix<T> {
    let v = T::one() / T::lit(d as f64);
    ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        if r % (d + 1) == 0 && c % (d + 1) == 0 {
            Complex::new(v, T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}
