//! Entanglement-assisted filter games.
//!
//! A filter `K` on `AA'` is scored on the Choi state of a channel,
//! `P(N, K) = tr[K((N ⊗ ℐ)(Φ⁺))]`. Ratios of scores against the best free
//! channel lower-bound `1 + R(N)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Subsystem};
use crate::ops::{apply_ao, AllowedOperation};
use crate::preservability::{add_probe_parents, restricted_robustness, ProbeFamily};
use crate::quantum::state::max_entangled_projector;
use crate::quantum::{Channel, Filter, FilterKind};
use crate::sdp::{self, CMat, MatExpr, SdpBuilder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameScore {
    pub value: f64,
    pub channel_desc: String,
    pub filter_desc: String,
}

fn describe_filter(k: &Filter<f64>) -> String {
    match k.kind() {
        FilterKind::F1 => format!("f1 on dim {}", k.dim()),
        FilterKind::General => format!("general, {} Kraus on dim {}", k.kraus().len(), k.dim()),
    }
}

pub fn score(n: &Channel<f64>, k: &Filter<f64>) -> Result<GameScore> {
    let d = n.dim()?;
    if k.dim() != d * d {
        return Err(Error::InvalidShape(format!(
            "filter on dimension {} for channel dimension {d}",
            k.dim()
        )));
    }
    let value = k.apply(n.choi_matrix())?.trace().re.clamp(0.0, 1.0);
    Ok(GameScore {
        value,
        channel_desc: format!("channel {d}→{d}, {} Kraus", n.kraus().len()),
        filter_desc: describe_filter(k),
    })
}

/// F₁ filter with operator `Γ = √(𝒦†(𝕀))`; preserves every score.
pub fn gamma_reduce(k: &Filter<f64>) -> Filter<f64> {
    if k.is_zero() {
        return Filter::f1_unchecked(ComplexMatrix::zeros(k.dim(), k.dim()));
    }
    if k.kind() == FilterKind::F1 {
        return k.clone();
    }
    Filter::f1_unchecked(k.effect_operator().hermitian_part().sqrt_psd())
}

/// F₁ filter whose operator is the `Φ⁺` projector on `d²`.
pub fn phi_plus_filter(d: usize) -> Filter<f64> {
    Filter::f1_unchecked(max_entangled_projector(d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorMethod {
    /// Maximum over channels whose pushforwards of the family are JM.
    Probe(String),
    /// Published free-set maximum `5/8` for the qubit `Φ⁺` filter.
    Analytic,
}

impl std::fmt::Display for DenominatorMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DenominatorMethod::Probe(l) => write!(f, "probe:{l}"),
            DenominatorMethod::Analytic => write!(f, "analytic-5/8"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Denominator {
    pub value: f64,
    pub method: DenominatorMethod,
    pub status: String,
}

/// `max P(L, K)` over the probe-relaxed free set. The relaxed set contains
/// the free set, so this upper-bounds the true denominator.
pub fn ia_denominator(k: &Filter<f64>, f: &ProbeFamily, cfg: &Config) -> Result<Denominator> {
    let d = f.dim();
    if k.dim() != d * d {
        return Err(Error::InvalidShape(format!("filter on dimension {} for probes on {d}", k.dim())));
    }
    let op = k.effect_operator().hermitian_part();
    let mut b = SdpBuilder::new();
    let jl = b.var("J", d * d, true);
    let j = MatExpr::var(jl, d * d);
    b.eq_matrix(
        &j.partial_trace(d, d, Subsystem::A)?,
        &MatExpr::constant(&ComplexMatrix::identity(d).scale(1.0 / d as f64)),
        "marginal",
    )?;
    add_probe_parents(&mut b, &j, d, d, f, cfg)?;
    b.maximize(j.trace_with(&op));
    let problem = b.build();
    sdp::dump_problem(&problem, cfg.dump_dir.as_deref(), "ia_denominator")?;
    let sol = sdp::solve(&problem, cfg.solver.as_ref())?.require_optimal()?;
    if !(sol.value > 0.0) {
        return Err(Error::solver(sol.status_text, format!("non-positive denominator {}", sol.value)));
    }
    Ok(Denominator {
        value: sol.value.min(1.0),
        method: DenominatorMethod::Probe(f.label.clone()),
        status: sol.status_text,
    })
}

/// The constant `5/8`, valid only for the qubit `Φ⁺` filter.
pub fn ia_denominator_analytic(k: &Filter<f64>, cfg: &Config) -> Result<Denominator> {
    if k.dim() != 4 || k.effect_operator().max_abs_diff(&max_entangled_projector(2)) > cfg.tol.rep {
        return Err(Error::BoundUnavailable(
            "analytic denominator is known only for the qubit Φ⁺ filter".into(),
        ));
    }
    Ok(Denominator {
        value: 5.0 / 8.0,
        method: DenominatorMethod::Analytic,
        status: "analytic".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameBound {
    pub filter: Filter<f64>,
    pub numerator: f64,
    pub denominator: f64,
    /// Certified lower bound on `1 + R(N)`.
    pub ratio_lb: f64,
    pub denominator_method: String,
    pub status: String,
}

fn bound_from(n: &Channel<f64>, k: &Filter<f64>, den: Denominator) -> Result<GameBound> {
    let f1 = gamma_reduce(k);
    let numerator = score(n, &f1)?.value;
    Ok(GameBound {
        filter: f1,
        numerator,
        denominator: den.value,
        ratio_lb: numerator / den.value,
        denominator_method: den.method.to_string(),
        status: den.status,
    })
}

pub fn game_lb(n: &Channel<f64>, k: &Filter<f64>, f: &ProbeFamily, cfg: &Config) -> Result<GameBound> {
    let den = ia_denominator(&gamma_reduce(k), f, cfg)?;
    bound_from(n, k, den)
}

pub fn game_lb_analytic(n: &Channel<f64>, k: &Filter<f64>, cfg: &Config) -> Result<GameBound> {
    let den = ia_denominator_analytic(&gamma_reduce(k), cfg)?;
    bound_from(n, k, den)
}

/// `√K` for `K = Y/‖Y‖∞`, `Y` clipped to its positive part.
pub fn witness_filter(y: &CMat) -> Result<Filter<f64>> {
    let y = y.hermitian_part().psd_part();
    let top = y.max_eigenvalue_h();
    if !(top > 1e-12) {
        return Err(Error::solver("dual", "witness operator vanished"));
    }
    let k = y.scale(1.0 / top);
    Ok(Filter::f1_unchecked(k.sqrt_psd()))
}

/// Game bound for the filter built from the dual of the restricted
/// robustness program. Its ratio matches `1 + restricted_robustness_lb`.
pub fn witness_bound(n: &Channel<f64>, f: &ProbeFamily, cfg: &Config) -> Result<GameBound> {
    let lb = restricted_robustness(n, f, cfg)?;
    let k = witness_filter(&lb.witness)?;
    game_lb(n, &k, f, cfg)
}

/// Best score over `f(N)` for `f` in the bank; the unmodified channel is
/// always included, so the result is at least `score(N, K)`.
pub fn pmax_search(n: &Channel<f64>, k: &Filter<f64>, bank: &[AllowedOperation]) -> Result<f64> {
    let base = score(n, k)?.value;
    let scores = bank
        .par_iter()
        .map(|op| Ok(score(&apply_ao(op, n)?, k)?.value))
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.into_iter().fold(base, f64::max))
}

pub const CONVERSION_MARGIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConversionVerdict {
    /// No filter separated the channels. Not a convertibility proof.
    NoObstructionFound,
    /// Some filter scored `m` above `n` on the bank. Heuristic evidence only,
    /// since both sides are bank-restricted lower bounds.
    CandidateObstruction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub verdict: ConversionVerdict,
    /// `(filter index, pmax for n, pmax for m)` of the widest gap.
    pub worst: Option<(usize, f64, f64)>,
}

/// Looks for a filter with `pmax(m) > pmax(n) + margin`, evidence that `n`
/// cannot be converted into `m`.
pub fn conversion_falsifier(
    n: &Channel<f64>,
    m: &Channel<f64>,
    filters: &[Filter<f64>],
    bank: &[AllowedOperation],
) -> Result<ConversionReport> {
    let mut worst: Option<(usize, f64, f64)> = None;
    for (i, k) in filters.iter().enumerate() {
        let pn = pmax_search(n, k, bank)?;
        let pm = pmax_search(m, k, bank)?;
        if worst.is_none_or(|(_, a, b)| pm - pn > b - a) {
            worst = Some((i, pn, pm));
        }
    }
    let verdict = match worst {
        Some((_, pn, pm)) if pm > pn + CONVERSION_MARGIN => ConversionVerdict::CandidateObstruction,
        _ => ConversionVerdict::NoObstructionFound,
    };
    Ok(ConversionReport { verdict, worst })
}
