use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::quantum::Effect;
use crate::scalar::Real;
use crate::tol::Tolerances;

/// Indexed family of POVMs `{E_{a|x}}`: `settings[x][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementAssemblage<T: Real> {
    dim: usize,
    settings: Vec<Vec<Effect<T>>>,
}

impl<T: Real> MeasurementAssemblage<T> {
    pub fn new(settings: Vec<Vec<Effect<T>>>, tol: &Tolerances) -> Result<Self> {
        let dim = settings
            .first()
            .and_then(|s| s.first())
            .map(Effect::dim)
            .ok_or_else(|| Error::InvalidAssemblage("no settings".into()))?;
        let id = ComplexMatrix::<T>::identity(dim);
        for (x, povm) in settings.iter().enumerate() {
            if povm.is_empty() {
                return Err(Error::InvalidAssemblage(format!("setting {x} has no outcomes")));
            }
            let mut sum = ComplexMatrix::zeros(dim, dim);
            for e in povm {
                if e.dim() != dim {
                    return Err(Error::InvalidAssemblage("mixed effect dimensions".into()));
                }
                sum += e.matrix();
            }
            let dev = sum.max_abs_diff(&id);
            if dev > T::lit(tol.tp) {
                return Err(Error::InvalidAssemblage(format!(
                    "setting {x} sums to identity only within {:e}",
                    dev.as_f64()
                )));
            }
        }
        Ok(Self { dim, settings })
    }

    /// Validates effects from raw matrices.
    pub fn from_matrices(settings: Vec<Vec<ComplexMatrix<T>>>, tol: &Tolerances) -> Result<Self> {
        let effects = settings
            .into_iter()
            .map(|povm| povm.into_iter().map(|m| Effect::new(m, tol)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(effects, tol)
    }

    pub(crate) fn from_parts_unchecked(dim: usize, settings: Vec<Vec<Effect<T>>>) -> Self {
        Self { dim, settings }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> &[Vec<Effect<T>>] {
        &self.settings
    }

    pub fn num_settings(&self) -> usize {
        self.settings.len()
    }

    pub fn effect(&self, a: usize, x: usize) -> &Effect<T> {
        &self.settings[x][a]
    }

    pub fn outcome_counts(&self) -> Vec<usize> {
        self.settings.iter().map(Vec::len).collect()
    }

    /// Applies `f` to every effect, keeping the indexing.
    pub fn map_effects(&self, mut f: impl FnMut(&Effect<T>) -> Effect<T>) -> Self {
        Self {
            dim: self.dim,
            settings: self.settings.iter().map(|povm| povm.iter().map(&mut f).collect()).collect(),
        }
    }

    /// Effects `η E + (1 − η) tr(E) 𝕀 / d`.
    pub fn depolarised(&self, eta: T) -> Self {
        self.map_effects(|e| e.depolarised(eta))
    }

    /// The assemblage `{tr(E_{a|x}) 𝕀 / d}` of the same shape.
    pub fn trivialised(&self) -> Self {
        self.depolarised(T::zero())
    }

    /// Keeps only the listed settings, in the given order.
    pub fn select(&self, xs: &[usize]) -> Result<Self> {
        let settings = xs
            .iter()
            .map(|&x| {
                self.settings
                    .get(x)
                    .cloned()
                    .ok_or_else(|| Error::InvalidParameter(format!("setting {x} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        if settings.is_empty() {
            return Err(Error::InvalidAssemblage("empty selection".into()));
        }
        Ok(Self {
            dim: self.dim,
            settings,
        })
    }

    /// Concatenates the settings of two assemblages on the same space.
    pub fn extend(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidShape("assemblage dimensions differ".into()));
        }
        let mut settings = self.settings.clone();
        settings.extend(other.settings.iter().cloned());
        Ok(Self {
            dim: self.dim,
            settings,
        })
    }

    /// Largest entrywise deviation between two same-shape assemblages.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.outcome_counts() != other.outcome_counts() || self.dim != other.dim {
            return Err(Error::InvalidShape("assemblage shapes differ".into()));
        }
        let mut worst = T::zero();
        for (p, q) in self.settings.iter().zip(&other.settings) {
            for (e, f) in p.iter().zip(q) {
                worst = worst.max(e.matrix().max_abs_diff(f.matrix()));
            }
        }
        Ok(worst)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct AssemblageRepr<T: Real> {
    dim: usize,
    settings: Vec<Vec<ComplexMatrix<T>>>,
}

impl<T: Real> Serialize for MeasurementAssemblage<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        AssemblageRepr {
            dim: self.dim,
            settings: self
                .settings
                .iter()
                .map(|povm| povm.iter().map(|e| e.matrix().clone()).collect())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for MeasurementAssemblage<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = AssemblageRepr::<T>::deserialize(deserializer)?;
        let out = Self::from_matrices(repr.settings, &Tolerances::default())
            .map_err(serde::de::Error::custom)?;
        if out.dim != repr.dim {
            return Err(serde::de::Error::custom("declared dim does not match effects"));
        }
        Ok(out)
    }
}
