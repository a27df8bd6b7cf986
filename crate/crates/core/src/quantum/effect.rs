use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::Real;
use crate::tol::Tolerances;

/// POVM element `0 ≤ E ≤ 𝕀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Effect<T: Real> {
    dim: usize,
    mat: ComplexMatrix<T>,
}

impl<T: Real> Effect<T> {
    pub fn new(mat: ComplexMatrix<T>, tol: &Tolerances) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidShape("effect must be square".into()));
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite);
        }
        if !mat.is_hermitian(T::lit(tol.herm)) {
            return Err(Error::InvalidEffect("not Hermitian".into()));
        }
        let spec = mat.eigenvalues_h();
        let (lo, hi) = (spec[0], spec[spec.len() - 1]);
        let slack = T::lit(tol.psd);
        if lo < -slack || hi > T::one() + slack {
            return Err(Error::InvalidEffect(format!(
                "spectrum [{:e}, {}] outside [0, 1]",
                lo.as_f64(),
                hi.as_f64()
            )));
        }
        Ok(Self {
            dim: mat.rows(),
            mat,
        })
    }

    pub(crate) fn from_matrix_unchecked(mat: ComplexMatrix<T>) -> Self {
        Self {
            dim: mat.rows(),
            mat,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_matrix_unchecked(ComplexMatrix::identity(d))
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

    /// `η E + (1 − η) tr(E) 𝕀 / d`.
    pub fn depolarised(&self, eta: T) -> Self {
        let d = T::lit(self.dim as f64);
        let noise = ComplexMatrix::identity(self.dim).scale((T::one() - eta) * self.mat.trace().re / d);
        Self::from_matrix_unchecked(&self.mat.scale(eta) + &noise)
    }
}
