//! CPTP maps with Kraus and normalized Choi representations.
//!
//! The Choi state is `(𝒩 ⊗ ℐ)(Φ⁺)` with the output as the first tensor
//! factor and the reference copy of the input as the second, so
//! `tr_out J = 𝕀 / d_in`.

use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Subsystem};
use crate::quantum::{Effect, MeasurementAssemblage, QState};
use crate::scalar::Real;
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T: Real> {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix<T>>,
    choi: QState<T>,
}

/// Normalized Choi matrix of a Kraus list, without validation.
pub(crate) fn choi_of_kraus<T: Real>(kraus: &[ComplexMatrix<T>], dim_in: usize, dim_out: usize) -> ComplexMatrix<T> {
    let n = dim_in * dim_out;
    let mut j = ComplexMatrix::zeros(n, n);
    for k in kraus {
        let v = k.entries();
        j += &ComplexMatrix::outer(&v);
    }
    j.scale(T::one() / T::lit(dim_in as f64))
}

/// Minimal Kraus set from a normalized Choi matrix.
pub(crate) fn kraus_of_choi<T: Real>(
    choi: &ComplexMatrix<T>,
    dim_in: usize,
    dim_out: usize,
    cutoff: T,
) -> Vec<ComplexMatrix<T>> {
    let eig = choi.eigh();
    let scale = T::lit(dim_in as f64);
    let mut out = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate().rev() {
        if lambda <= cutoff {
            continue;
        }
        let amp = (scale * lambda).sqrt();
        out.push(ComplexMatrix::from_fn(dim_out, dim_in, |o, i| {
            eig.vectors.get(o * dim_in + i, k) * amp
        }));
    }
    out
}

fn completeness<T: Real>(kraus: &[ComplexMatrix<T>], dim_in: usize) -> ComplexMatrix<T> {
    let mut s = ComplexMatrix::zeros(dim_in, dim_in);
    for k in kraus {
        s += &(&k.dagger() * k);
    }
    s
}

impl<T: Real> Channel<T> {
    pub fn from_kraus(kraus: Vec<ComplexMatrix<T>>, tol: &Tolerances) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::NotAChannel("empty Kraus list".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidDimension("zero dimension".into()));
        }
        for k in &kraus {
            if k.rows() != dim_out || k.cols() != dim_in {
                return Err(Error::InvalidShape("Kraus operators differ in shape".into()));
            }
            if !k.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        let dev = completeness(&kraus, dim_in).max_abs_diff(&ComplexMatrix::identity(dim_in));
        if dev > T::lit(tol.tp) {
            return Err(Error::NotAChannel(format!(
                "Kraus completeness violated by {:e}",
                dev.as_f64()
            )));
        }
        let choi = QState::from_matrix_unchecked(choi_of_kraus(&kraus, dim_in, dim_out));
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
            choi,
        })
    }

    /// Builds a channel from its normalized Choi state on `out ⊗ in`.
    pub fn from_choi(choi: ComplexMatrix<T>, dim_in: usize, dim_out: usize, tol: &Tolerances) -> Result<Self> {
        if choi.rows() != dim_in * dim_out || !choi.is_square() {
            return Err(Error::InvalidShape(format!(
                "Choi matrix {}x{} for dims in={dim_in} out={dim_out}",
                choi.rows(),
                choi.cols()
            )));
        }
        if !choi.is_finite() {
            return Err(Error::NonFinite);
        }
        if !choi.is_hermitian(T::lit(tol.herm)) {
            return Err(Error::NotAChannel("Choi matrix not Hermitian".into()));
        }
        let choi = choi.hermitian_part();
        let min = choi.min_eigenvalue_h();
        if min < -T::lit(tol.psd) {
            return Err(Error::NotAChannel(format!("Choi eigenvalue {:e}", min.as_f64())));
        }
        let marginal = choi.partial_trace(dim_out, dim_in, Subsystem::A)?;
        let target = ComplexMatrix::identity(dim_in).scale(T::one() / T::lit(dim_in as f64));
        let dev = marginal.max_abs_diff(&target);
        if dev > T::lit(tol.tp) {
            return Err(Error::NotAChannel(format!(
                "input marginal deviates from I/d by {:e}",
                dev.as_f64()
            )));
        }
        let kraus = kraus_of_choi(&choi, dim_in, dim_out, T::lit(tol.psd));
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
            choi: QState::from_matrix_unchecked(choi),
        })
    }

    /// Same as [`Channel::from_kraus`] but first repairs small completeness
    /// drift by `K ↦ K S^{-1/2}` with `S = Σ K†K`.
    pub fn from_kraus_normalized(kraus: Vec<ComplexMatrix<T>>, tol: &Tolerances) -> Result<Self> {
        let dim_in = kraus
            .first()
            .ok_or_else(|| Error::NotAChannel("empty Kraus list".into()))?
            .cols();
        let s = completeness(&kraus, dim_in);
        let inv_sqrt = s.spectral_map(|x| {
            if x > T::zero() {
                T::one() / x.sqrt()
            } else {
                T::zero()
            }
        });
        let fixed = kraus.iter().map(|k| k * &inv_sqrt).collect();
        Self::from_kraus(fixed, tol)
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(ComplexMatrix::identity(d)).expect("identity is unitary")
    }

    pub fn unitary(u: ComplexMatrix<T>) -> Result<Self> {
        let tol = Tolerances::default();
        if !u.is_square() {
            return Err(Error::InvalidShape("unitary must be square".into()));
        }
        Self::from_kraus(vec![u], &tol)
    }

    /// `ρ ↦ tr(ρ) σ`.
    pub fn replacement(sigma: &QState<T>, dim_in: usize) -> Result<Self> {
        let d_out = sigma.dim();
        let choi = sigma
            .matrix()
            .kron(&ComplexMatrix::identity(dim_in).scale(T::one() / T::lit(dim_in as f64)));
        Self::from_choi(choi, dim_in, d_out, &Tolerances::default())
    }

    /// `ρ ↦ Σ_k tr(E_k ρ) σ_k`: entanglement breaking by construction.
    pub fn measure_prepare(povm: &[Effect<T>], states: &[QState<T>], tol: &Tolerances) -> Result<Self> {
        if povm.is_empty() || povm.len() != states.len() {
            return Err(Error::InvalidParameter(
                "measure-prepare needs one state per outcome".into(),
            ));
        }
        let cutoff = T::lit(tol.psd);
        let mut kraus = Vec::new();
        for (e, s) in povm.iter().zip(states) {
            let ee = e.matrix().eigh();
            let se = s.matrix().eigh();
            for (ie, &ev) in ee.values.iter().enumerate() {
                if ev <= cutoff {
                    continue;
                }
                for (is, &sv) in se.values.iter().enumerate() {
                    if sv <= cutoff {
                        continue;
                    }
                    let amp = (ev * sv).sqrt();
                    kraus.push(ComplexMatrix::from_fn(s.dim(), e.dim(), |o, i| {
                        se.vectors.get(o, is) * ee.vectors.get(i, ie).conj() * amp
                    }));
                }
            }
        }
        Self::from_kraus_normalized(kraus, tol)
    }

    /// `Λ_p(ρ) = p ρ + (1 − p) tr(ρ) 𝕀 / d`.
    pub fn depolarising(p: T, d: usize) -> Result<Self> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "depolarising parameter {} outside [0, 1]",
                p.as_f64()
            )));
        }
        if d == 0 {
            return Err(Error::InvalidDimension("dimension must be positive".into()));
        }
        let dd = T::lit((d * d) as f64);
        let phi = crate::quantum::state::max_entangled_projector::<T>(d);
        let choi = &phi.scale(p) + &ComplexMatrix::identity(d * d).scale((T::one() - p) / dd);
        Self::from_choi(choi, d, d, &Tolerances::default())
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix<T>] {
        &self.kraus
    }

    pub fn choi(&self) -> &QState<T> {
        &self.choi
    }

    pub fn choi_matrix(&self) -> &ComplexMatrix<T> {
        self.choi.matrix()
    }

    /// Square channels only.
    pub fn dim(&self) -> Result<usize> {
        if self.dim_in != self.dim_out {
            return Err(Error::InvalidShape(format!(
                "channel is {}→{}, expected square",
                self.dim_in, self.dim_out
            )));
        }
        Ok(self.dim_in)
    }

    pub fn apply(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if rho.rows() != self.dim_in || !rho.is_square() {
            return Err(Error::InvalidShape("input dimension mismatch".into()));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += &rho.conjugate_by(k);
        }
        Ok(out)
    }

    /// Heisenberg-picture action `𝒩†(X) = Σ K† X K` on any operator.
    pub fn adjoint_apply(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if x.rows() != self.dim_out || !x.is_square() {
            return Err(Error::InvalidShape("effect dimension mismatch".into()));
        }
        let mut out = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += &x.conjugate_by(&k.dagger());
        }
        Ok(out)
    }

    /// `𝒩†(E)`; unitality keeps the result an effect.
    pub fn heisenberg(&self, e: &Effect<T>) -> Result<Effect<T>> {
        Ok(Effect::from_matrix_unchecked(
            self.adjoint_apply(e.matrix())?.hermitian_part(),
        ))
    }

    /// Element-wise `𝒩†(E_{a|x})`.
    pub fn pushforward(&self, e: &MeasurementAssemblage<T>) -> Result<MeasurementAssemblage<T>> {
        if e.dim() != self.dim_out {
            return Err(Error::InvalidShape(format!(
                "assemblage on dimension {} but channel outputs {}",
                e.dim(),
                self.dim_out
            )));
        }
        let settings = e
            .settings()
            .iter()
            .map(|povm| povm.iter().map(|eff| self.heisenberg(eff)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(MeasurementAssemblage::from_parts_unchecked(self.dim_in, settings))
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Channel<T>) -> Result<Self> {
        if next.dim_in != self.dim_out {
            return Err(Error::InvalidShape("composition dimension mismatch".into()));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Self::compressed(kraus, self.dim_in, next.dim_out)
    }

    /// Convex combination `Σ w_i 𝒩_i`.
    pub fn mixture(weights: &[T], channels: &[Channel<T>]) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        if weights.len() != channels.len() {
            return Err(Error::InvalidParameter("weights/channels length mismatch".into()));
        }
        let n = first.dim_in * first.dim_out;
        let mut choi = ComplexMatrix::zeros(n, n);
        for (w, c) in weights.iter().zip(channels) {
            if c.dim_in != first.dim_in || c.dim_out != first.dim_out {
                return Err(Error::InvalidShape("mixture of different shapes".into()));
            }
            if *w < T::zero() {
                return Err(Error::InvalidParameter("negative mixture weight".into()));
            }
            choi += &c.choi_matrix().scale(*w);
        }
        Self::from_choi(choi, first.dim_in, first.dim_out, &Tolerances::default())
    }

    /// Rebuilds a minimal Kraus set for an already-valid Kraus list.
    pub(crate) fn compressed(kraus: Vec<ComplexMatrix<T>>, dim_in: usize, dim_out: usize) -> Result<Self> {
        let choi = choi_of_kraus(&kraus, dim_in, dim_out).hermitian_part();
        let tol = Tolerances::default();
        let minimal = kraus_of_choi(&choi, dim_in, dim_out, T::lit(tol.psd) * T::lit(1e-4));
        let dev = completeness(&minimal, dim_in).max_abs_diff(&ComplexMatrix::identity(dim_in));
        if dev > T::lit(tol.tp) {
            return Err(Error::NotAChannel(format!(
                "composed map violates completeness by {:e}",
                dev.as_f64()
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus: minimal,
            choi: QState::from_matrix_unchecked(choi),
        })
    }

    /// `⟨Φ⁺|(𝒩 ⊗ ℐ)(Φ⁺)|Φ⁺⟩`.
    pub fn singlet_fraction(&self) -> Result<T> {
        let d = self.dim()?;
        let phi = crate::quantum::state::max_entangled_projector::<T>(d);
        let f = phi.trace_product(self.choi_matrix()).re;
        Ok(f.max(T::zero()).min(T::one()))
    }

    /// Largest deviation of `tr_out J` from `𝕀 / d_in`.
    pub fn marginal_deviation(&self) -> T {
        let m = self
            .choi_matrix()
            .partial_trace(self.dim_out, self.dim_in, Subsystem::A)
            .expect("Choi shape is consistent");
        m.max_abs_diff(&ComplexMatrix::identity(self.dim_in).scale(T::one() / T::lit(self.dim_in as f64)))
    }

    /// Minimum eigenvalue of the partial transpose of the Choi state.
    pub fn choi_ppt_min_eigenvalue(&self) -> T {
        self.choi_matrix()
            .partial_transpose(self.dim_out, self.dim_in, Subsystem::B)
            .expect("Choi shape is consistent")
            .min_eigenvalue_h()
    }

    /// Trace-norm distance of the normalized Choi states.
    pub fn choi_distance(&self, other: &Self) -> Result<T> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(Error::InvalidShape("channel shapes differ".into()));
        }
        Ok((self.choi_matrix() - other.choi_matrix()).trace_norm_h())
    }

    pub fn cast<U: Real>(&self) -> Channel<U> {
        Channel {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: self.kraus.iter().map(ComplexMatrix::cast).collect(),
            choi: QState::from_matrix_unchecked(self.choi_matrix().cast()),
        }
    }
}

/// Alias for [`Channel::from_choi`] mirroring the pair with `choi_of_channel`.
pub fn channel_of_choi<T: Real>(c: &QState<T>, d_in: usize, d_out: usize, tol: &Tolerances) -> Result<Channel<T>> {
    Channel::from_choi(c.matrix().clone(), d_in, d_out, tol)
}

pub fn choi_of_channel<T: Real>(n: &Channel<T>) -> QState<T> {
    n.choi().clone()
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ChannelRepr<T: Real> {
    dim_in: usize,
    dim_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kraus: Option<Vec<ComplexMatrix<T>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    choi: Option<ComplexMatrix<T>>,
}

impl<T: Real> Serialize for Channel<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelRepr {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: Some(self.kraus.clone()),
            choi: None,
        }
        .serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for Channel<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ChannelRepr::<T>::deserialize(deserializer)?;
        let tol = Tolerances::default();
        let ch = match (repr.kraus, repr.choi) {
            (Some(k), choi) => {
                let ch = Channel::from_kraus(k, &tol).map_err(D::Error::custom)?;
                if let Some(c) = choi
                    && (c.rows() != ch.choi_matrix().rows()
                        || c.max_abs_diff(ch.choi_matrix()) > T::lit(tol.rep))
                    {
                        return Err(D::Error::custom("Kraus and Choi representations disagree"));
                    }
                ch
            }
            (None, Some(c)) => Channel::from_choi(c, repr.dim_in, repr.dim_out, &tol).map_err(D::Error::custom)?,
            (None, None) => return Err(D::Error::custom("channel needs `kraus` or `choi`")),
        };
        if ch.dim_in != repr.dim_in || ch.dim_out != repr.dim_out {
            return Err(D::Error::custom("declared dimensions do not match operators"));
        }
        Ok(ch)
    }
}

/// Complex literal helper for tests and builders.
pub(crate) fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}
