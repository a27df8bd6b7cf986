use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::quantum::Effect;
use crate::scalar::Real;
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    General,
    /// Single PSD Kraus operator `√K` with `0 ≤ K ≤ 𝕀`.
    F1,
}

/// Completely positive trace-non-increasing map.
///
/// An empty Kraus list is the zero filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Filter<T: Real> {
    dim: usize,
    kraus: Vec<ComplexMatrix<T>>,
    kind: FilterKind,
}

impl<T: Real> Filter<T> {
    pub fn new(dim: usize, kraus: Vec<ComplexMatrix<T>>, tol: &Tolerances) -> Result<Self> {
        for k in &kraus {
            if k.rows() != dim || k.cols() != dim {
                return Err(Error::InvalidShape(format!(
                    "filter Kraus operator is {}x{}, expected {dim}x{dim}",
                    k.rows(),
                    k.cols()
                )));
            }
            if !k.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        let f = Self {
            dim,
            kraus,
            kind: FilterKind::General,
        };
        if !f.kraus.is_empty() {
            let top = f.effect_operator().max_eigenvalue_h();
            if top > T::one() + T::lit(tol.tp) {
                return Err(Error::NotAFilter(format!(
                    "Σ K†K has eigenvalue {} > 1",
                    top.as_f64()
                )));
            }
        }
        Ok(f)
    }

    /// F₁ filter with Kraus operator `sqrt_k`.
    pub fn f1(sqrt_k: ComplexMatrix<T>, tol: &Tolerances) -> Result<Self> {
        if !sqrt_k.is_square() {
            return Err(Error::InvalidShape("F1 operator must be square".into()));
        }
        if !sqrt_k.is_hermitian(T::lit(tol.herm)) {
            return Err(Error::NotAFilter("F1 operator not Hermitian".into()));
        }
        let spec = sqrt_k.eigenvalues_h();
        let slack = T::lit(tol.psd);
        if spec[0] < -slack || spec[spec.len() - 1] > T::one() + slack {
            return Err(Error::NotAFilter("F1 operator spectrum outside [0, 1]".into()));
        }
        Ok(Self {
            dim: sqrt_k.rows(),
            kraus: vec![sqrt_k.hermitian_part()],
            kind: FilterKind::F1,
        })
    }

    /// F₁ filter `(·) ↦ √K (·) √K` from `0 ≤ K ≤ 𝕀`.
    pub fn f1_from_operator(k: &ComplexMatrix<T>, tol: &Tolerances) -> Result<Self> {
        Effect::new(k.clone(), tol).map_err(|e| Error::NotAFilter(e.to_string()))?;
        Self::f1(k.sqrt_psd(), tol)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            kraus: Vec::new(),
            kind: FilterKind::General,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus: vec![ComplexMatrix::identity(dim)],
            kind: FilterKind::F1,
        }
    }

    pub(crate) fn f1_unchecked(sqrt_k: ComplexMatrix<T>) -> Self {
        Self {
            dim: sqrt_k.rows(),
            kraus: vec![sqrt_k],
            kind: FilterKind::F1,
        }
    }

    pub(crate) fn from_kraus_unchecked(dim: usize, kraus: Vec<ComplexMatrix<T>>) -> Self {
        Self {
            dim,
            kraus,
            kind: FilterKind::General,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix<T>] {
        &self.kraus
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    /// No Kraus operators, or only exactly-zero ones.
    pub fn is_zero(&self) -> bool {
        self.kraus.iter().all(|k| k.max_abs() == T::zero())
    }

    /// `𝒦†(𝕀) = Σ K†K`.
    pub fn effect_operator(&self) -> ComplexMatrix<T> {
        let mut s = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            s += &(&k.dagger() * k);
        }
        s
    }

    /// Unnormalized output `𝒦(ρ)`.
    pub fn apply(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if rho.rows() != self.dim || !rho.is_square() {
            return Err(Error::InvalidShape("filter input dimension mismatch".into()));
        }
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += &rho.conjugate_by(k);
        }
        Ok(out)
    }

    /// Post-selected state `𝒦(ρ) / tr 𝒦(ρ)` with its success probability.
    pub fn apply_normalized(&self, rho: &ComplexMatrix<T>, tol: &Tolerances) -> Result<(ComplexMatrix<T>, T)> {
        let out = self.apply(rho)?;
        let p = out.trace().re;
        if p < T::lit(tol.zero_branch) {
            return Err(Error::ZeroProbabilityBranch(p.as_f64()));
        }
        Ok((out.scale(T::one() / p), p))
    }

    /// `𝒦†(X) = Σ K† X K`.
    pub fn adjoint_apply(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if x.rows() != self.dim || !x.is_square() {
            return Err(Error::InvalidShape("filter operator dimension mismatch".into()));
        }
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += &x.conjugate_by(&k.dagger());
        }
        Ok(out)
    }

    /// `self ∘ first` (apply `first`, then `self`).
    pub fn after(&self, first: &Filter<T>) -> Result<Self> {
        if first.dim != self.dim {
            return Err(Error::InvalidShape("filter composition dimension mismatch".into()));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * first.kraus.len());
        for b in &self.kraus {
            for a in &first.kraus {
                kraus.push(b * a);
            }
        }
        Ok(Self::from_kraus_unchecked(self.dim, kraus))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_branch_is_reported() {
        let tol = Tolerances::default();
        let proj = ComplexMatrix::<f64>::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        let f = Filter::f1(proj, &tol).unwrap();
        let rho1 = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(f.apply_normalized(&rho1, &tol), Err(Error::ZeroProbabilityBranch(_))));
        let rho = ComplexMatrix::identity(2).scale(0.5);
        let (out, p) = f.apply_normalized(&rho, &tol).unwrap();
        assert!((p - 0.5).abs() < 1e-15 && (out.get(0, 0).re - 1.0).abs() < 1e-15);
        assert!(Filter::<f64>::zero(2).apply_normalized(&rho, &tol).is_err());
    }

    #[test]
    fn rejects_trace_increasing() {
        let tol = Tolerances::default();
        let k = ComplexMatrix::<f64>::identity(2).scale(1.1);
        assert!(matches!(Filter::new(2, vec![k.clone()], &tol), Err(Error::NotAFilter(_))));
        assert!(Filter::f1(k, &tol).is_err());
    }

    #[test]
    fn f1_from_operator_takes_square_root() {
        let tol = Tolerances::default();
        let k = ComplexMatrix::<f64>::diag(&[0.25, 1.0]);
        let f = Filter::f1_from_operator(&k, &tol).unwrap();
        assert_eq!(f.kind(), FilterKind::F1);
        assert!(f.kraus()[0].max_abs_diff(&ComplexMatrix::diag(&[0.5, 1.0])) < 1e-14);
        assert!(f.effect_operator().max_abs_diff(&k) < 1e-14);
    }
}
