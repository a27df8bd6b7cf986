//! Two-sided bounds on the incompatibility-preservability robustness
//!
//! ```text
//! R(N) = min { t ≥ 0 : (N + t W)/(1 + t) is incompatibility-annihilating }
//! ```
//!
//! Lower bounds come from finite probe families (an outer relaxation of the
//! free set) and from the singlet fraction; the upper bound from mixing into
//! entanglement-breaking channels, encoded by a PPT Choi state.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::jm::{self, add_parent_constraints, deterministic_responses, JmVerdict};
use crate::linalg::{ComplexMatrix, Subsystem};
use crate::quantum::{Channel, MeasurementAssemblage};
use crate::sdp::{self, CMat, LinExpr, MatExpr, SdpBuilder};

type Assemblage = MeasurementAssemblage<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeSet {
    /// First two mutually unbiased bases (Z, X for qubits).
    Xz,
    /// First three (Z, X, Y for qubits).
    Xyz,
    /// All `d + 1`.
    #[serde(alias = "mub-d")]
    Mub,
}

impl ProbeSet {
    pub fn count(self, d: usize) -> usize {
        match self {
            ProbeSet::Xz => 2,
            ProbeSet::Xyz => 3,
            ProbeSet::Mub => d + 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ProbeSet::Xz => "xz",
            ProbeSet::Xyz => "xyz",
            ProbeSet::Mub => "mub-d",
        }
    }
}

impl std::str::FromStr for ProbeSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xz" => Ok(ProbeSet::Xz),
            "xyz" => Ok(ProbeSet::Xyz),
            "mub" | "mub-d" => Ok(ProbeSet::Mub),
            other => Err(Error::InvalidParameter(format!("unknown probe set `{other}`"))),
        }
    }
}

/// Finite list of probe assemblages on a common space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFamily {
    pub label: String,
    pub probes: Vec<Assemblage>,
}

impl ProbeFamily {
    pub fn new(label: impl Into<String>, probes: Vec<Assemblage>, cfg: &Config) -> Result<Self> {
        let Some(first) = probes.first() else {
            return Err(Error::InvalidParameter("probe family is empty".into()));
        };
        let dim = first.dim();
        for p in &probes {
            if p.dim() != dim {
                return Err(Error::InvalidShape("probes differ in dimension".into()));
            }
            deterministic_responses(&p.outcome_counts(), cfg.response_cap)?;
        }
        Ok(Self {
            label: label.into(),
            probes,
        })
    }

    /// Single MUB-based probe at dimension `d`.
    pub fn standard(set: ProbeSet, d: usize, cfg: &Config) -> Result<Self> {
        let count = set.count(d);
        if count > d + 1 {
            return Err(Error::InvalidParameter(format!(
                "probe set `{}` needs {count} bases, d = {d} has {}",
                set.label(),
                d + 1
            )));
        }
        Self::new(format!("{}@d{d}", set.label()), vec![jm::mub_bases(d, count)?], cfg)
    }

    pub fn xyz(d: usize, cfg: &Config) -> Result<Self> {
        Self::standard(ProbeSet::Xyz, d, cfg)
    }

    pub fn dim(&self) -> usize {
        self.probes[0].dim()
    }
}

pub fn pushforward(n: &Channel<f64>, e: &Assemblage) -> Result<Assemblage> {
    n.pushforward(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IaConclusion {
    /// Every pushforward was jointly measurable. This is not a proof of
    /// membership in the free set; only the listed probes were tried.
    NoIncompatibilityDetected,
    /// Some pushforward is incompatible, so the channel is not free.
    IncompatibilityPreserved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaCertificateReport {
    pub channel: Channel<f64>,
    pub probes: ProbeFamily,
    pub per_probe: Vec<JmVerdict>,
    pub conclusion: IaConclusion,
    pub note: String,
}

pub fn probe_ia_test(n: &Channel<f64>, f: &ProbeFamily, cfg: &Config) -> Result<IaCertificateReport> {
    let per_probe = f
        .probes
        .iter()
        .map(|p| jm::jm_decide(&pushforward(n, p)?, cfg))
        .collect::<Result<Vec<_>>>()?;
    let preserved = per_probe.iter().any(|v| !v.jm);
    let (conclusion, note) = if preserved {
        (
            IaConclusion::IncompatibilityPreserved,
            "an incompatible pushforward certifies the channel is not incompatibility-annihilating".to_string(),
        )
    } else {
        (
            IaConclusion::NoIncompatibilityDetected,
            format!("all pushforwards of `{}` are jointly measurable; this is not a membership proof", f.label),
        )
    };
    Ok(IaCertificateReport {
        channel: n.clone(),
        probes: f.clone(),
        per_probe,
        conclusion,
        note,
    })
}

/// Adds JM parents for the pushforward of every probe through the map whose
/// (possibly unnormalized) Choi matrix is `choi`.
pub(crate) fn add_probe_parents(
    b: &mut SdpBuilder,
    choi: &MatExpr,
    dim_in: usize,
    dim_out: usize,
    f: &ProbeFamily,
    cfg: &Config,
) -> Result<()> {
    if f.dim() != dim_out {
        return Err(Error::InvalidShape(format!(
            "probes on dimension {} for channel output {dim_out}",
            f.dim()
        )));
    }
    for (i, probe) in f.probes.iter().enumerate() {
        let responses = deterministic_responses(&probe.outcome_counts(), cfg.response_cap)?;
        let targets = probe
            .settings()
            .iter()
            .map(|povm| {
                povm.iter()
                    .map(|e| choi.heisenberg_of_choi(e.matrix(), dim_in, dim_out))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        add_parent_constraints(b, &targets, dim_in, &responses, &format!("p{i}"), None)?;
    }
    Ok(())
}

/// `C ⪰ 0` with `tr_out C = t 𝕀/d_in`; returns `(C, t)`.
fn add_scaled_channel(b: &mut SdpBuilder, dim_in: usize, dim_out: usize) -> Result<(sdp::VarId, sdp::VarId)> {
    let c = b.var("C", dim_in * dim_out, true);
    let t = b.var("t", 1, true);
    let marginal = MatExpr::var(c, dim_in * dim_out).partial_trace(dim_out, dim_in, Subsystem::A)?;
    let target = MatExpr::scalar_times(&LinExpr::entry(t, 0, 0), &ComplexMatrix::identity(dim_in).scale(1.0 / dim_in as f64));
    b.eq_matrix(&marginal, &target, "marginal")?;
    Ok((c, t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedLb {
    /// Optimal `t`, clamped at 0.
    pub value: f64,
    /// Optimal `t` as returned by the solver.
    pub raw: f64,
    /// Dual of `C ⪰ 0`.
    pub witness: CMat,
    /// Mixing channel `C / t`, when `t ≥ 1e-9`.
    pub mixing_channel: Option<Channel<f64>>,
    pub probes: String,
    pub status: String,
}

/// Robustness against the probe-relaxed free set. Since that set contains
/// every incompatibility-annihilating channel, the value lower-bounds `R`.
pub fn restricted_robustness(n: &Channel<f64>, f: &ProbeFamily, cfg: &Config) -> Result<RestrictedLb> {
    let (din, dout) = (n.dim_in(), n.dim_out());
    let mut b = SdpBuilder::new();
    let (c, t) = add_scaled_channel(&mut b, din, dout)?;
    let mixture = MatExpr::constant(n.choi_matrix()).add(&MatExpr::var(c, din * dout))?;
    add_probe_parents(&mut b, &mixture, din, dout, f, cfg)?;
    b.minimize(LinExpr::entry(t, 0, 0));
    let problem = b.build();
    sdp::dump_problem(&problem, cfg.dump_dir.as_deref(), "restricted_robustness")?;
    let sol = sdp::solve(&problem, cfg.solver.as_ref())?.require_optimal()?;
    let raw = sol.value;
    if raw < -cfg.tol.feas {
        return Err(Error::InternalInconsistency(format!("restricted robustness {raw:e} < 0")));
    }
    let mixing_channel = if raw >= 1e-9 {
        let w = sol.primal("C")?.scale(1.0 / raw).psd_part();
        Channel::from_choi(w, din, dout, &crate::Tolerances { tp: 1e-5, ..cfg.tol }).ok()
    } else {
        None
    };
    Ok(RestrictedLb {
        value: raw.max(0.0),
        raw,
        witness: sol.dual("C")?.hermitian_part(),
        mixing_channel,
        probes: f.label.clone(),
        status: sol.status_text,
    })
}

pub fn restricted_robustness_lb(n: &Channel<f64>, f: &ProbeFamily, cfg: &Config) -> Result<f64> {
    Ok(restricted_robustness(n, f, cfg)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EbBound {
    pub value: f64,
    /// PPT equals separability only for `d_in · d_out ≤ 6`.
    pub certified: bool,
}

/// Robustness against channels with PPT Choi state, an upper bound on `R`
/// when PPT coincides with entanglement breaking.
pub fn eb_robustness(n: &Channel<f64>, cfg: &Config) -> Result<EbBound> {
    let (din, dout) = (n.dim_in(), n.dim_out());
    let mut b = SdpBuilder::new();
    let (c, t) = add_scaled_channel(&mut b, din, dout)?;
    let p = b.var("P", din * dout, true);
    let mixture = MatExpr::constant(n.choi_matrix()).add(&MatExpr::var(c, din * dout))?;
    b.eq_matrix(
        &MatExpr::var(p, din * dout),
        &mixture.partial_transpose(dout, din, Subsystem::B)?,
        "ppt",
    )?;
    b.minimize(LinExpr::entry(t, 0, 0));
    let problem = b.build();
    sdp::dump_problem(&problem, cfg.dump_dir.as_deref(), "eb_robustness")?;
    let sol = sdp::solve(&problem, cfg.solver.as_ref())?.require_optimal()?;
    Ok(EbBound {
        value: sol.value.max(0.0),
        certified: din * dout <= 6,
    })
}

/// Certified value of [`eb_robustness`]; fails for `d_in · d_out > 6`
/// where the PPT relaxation is not an upper bound.
pub fn eb_robustness_ub(n: &Channel<f64>, cfg: &Config) -> Result<f64> {
    let r = eb_robustness(n, cfg)?;
    if !r.certified {
        return Err(Error::BoundUnavailable(format!(
            "PPT is strictly weaker than separability for {}x{} Choi states; use eb_robustness for the heuristic value",
            n.dim_out(),
            n.dim_in()
        )));
    }
    Ok(r.value)
}

fn is_prime_power(d: usize) -> bool {
    if d < 2 {
        return false;
    }
    let p = (2..=d).find(|k| d.is_multiple_of(*k)).expect("d ≥ 2 has a divisor");
    let mut m = d;
    while m.is_multiple_of(p) {
        m /= p;
    }
    m == 1
}

/// `d√(d+1) / (d − 1 + √(d+1))`.
pub fn mub_factor(d: usize) -> f64 {
    let df = d as f64;
    let r = (df + 1.0).sqrt();
    df * r / (df - 1.0 + r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfBounds {
    pub singlet_fraction: f64,
    pub factor: f64,
    /// `max(0, F₊ · factor − 1)`.
    pub lower: f64,
    /// `F₊ > 1/factor`, which certifies incompatibility preservability.
    pub certificate: bool,
    pub threshold: f64,
}

pub fn sf_lower_bounds(n: &Channel<f64>) -> Result<SfBounds> {
    let fp = n.singlet_fraction()?;
    let d = n.dim_in();
    let factor = if d == 2 {
        8.0 / 5.0
    } else if is_prime_power(d) {
        mub_factor(d)
    } else {
        return Err(Error::BoundUnavailable(format!("d = {d} is not a prime power")));
    };
    let threshold = 1.0 / factor;
    Ok(SfBounds {
        singlet_fraction: fp,
        factor,
        lower: (fp * factor - 1.0).max(0.0),
        certificate: fp > threshold,
        threshold,
    })
}

pub fn harmonic(d: usize) -> f64 {
    (1..=d).map(|k| 1.0 / k as f64).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepolarisingReport {
    pub p: f64,
    pub d: usize,
    pub harmonic: f64,
    /// `(H_d − 1)/(d − 1)`; `p` at or below it makes `Λ_p` free.
    pub threshold: f64,
    pub below_threshold: bool,
    /// Exact membership in the free set, known for `d = 2`.
    pub free_exact: Option<bool>,
    pub singlet_fraction: f64,
    /// `[3/5 · max{0, 2p − 1}, max{0, 2p − 1}]` for `d = 2`.
    pub sandwich: Option<(f64, f64)>,
}

pub fn depolarising_report(p: f64, d: usize) -> Result<DepolarisingReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    if d < 2 {
        return Err(Error::InvalidDimension(format!("d = {d}")));
    }
    let h = harmonic(d);
    let threshold = (h - 1.0) / (d as f64 - 1.0);
    let df = d as f64;
    let sandwich = (d == 2).then(|| {
        let hi = (2.0 * p - 1.0).max(0.0);
        (0.6 * hi, hi)
    });
    Ok(DepolarisingReport {
        p,
        d,
        harmonic: h,
        threshold,
        below_threshold: p <= threshold,
        free_exact: (d == 2).then_some(p <= 0.5),
        singlet_fraction: p + (1.0 - p) / (df * df),
        sandwich,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessBounds {
    pub lower: f64,
    pub upper: f64,
    pub lower_method: String,
    pub upper_method: String,
    pub dim: usize,
    pub probe_lb: f64,
    pub sf_lb: Option<f64>,
    pub witness_lb: Option<f64>,
}

/// Best available interval for `R(N)`.
pub fn bounds(n: &Channel<f64>, f: &ProbeFamily, cfg: &Config) -> Result<RobustnessBounds> {
    let probe_lb = restricted_robustness_lb(n, f, cfg)?;
    let sf_lb = match sf_lower_bounds(n) {
        Ok(s) => Some(s.lower),
        Err(Error::BoundUnavailable(_)) | Err(Error::InvalidShape(_)) => None,
        Err(e) => return Err(e),
    };
    let witness_lb = match crate::game::witness_bound(n, f, cfg) {
        Ok(g) => Some((g.ratio_lb - 1.0).max(0.0)),
        Err(Error::Solver { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut lower = probe_lb;
    let mut lower_method = format!("probe:{}", f.label);
    if let Some(s) = sf_lb.filter(|&s| s > lower) {
        lower = s;
        lower_method = "singlet-fraction".into();
    }
    if let Some(w) = witness_lb.filter(|&w| w > lower) {
        lower = w;
        lower_method = format!("game-witness:{}", f.label);
    }
    let eb = eb_robustness(n, cfg)?;
    let upper_method = if eb.certified { "eb-ppt" } else { "eb-ppt-heuristic" }.to_string();
    if lower > eb.value + cfg.tol.gap {
        return Err(Error::InternalInconsistency(format!(
            "lower bound {lower} ({lower_method}) exceeds upper bound {} ({upper_method})",
            eb.value
        )));
    }
    Ok(RobustnessBounds {
        lower,
        upper: eb.value,
        lower_method,
        upper_method,
        dim: n.dim_in(),
        probe_lb,
        sf_lb,
        witness_lb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_powers() {
        let pp: Vec<usize> = (1..17).filter(|&d| is_prime_power(d)).collect();
        assert_eq!(pp, vec![2, 3, 4, 5, 7, 8, 9, 11, 13, 16]);
    }

    #[test]
    fn harmonic_thresholds() {
        assert!((depolarising_report(0.3, 2).unwrap().threshold - 0.5).abs() < 1e-15);
        assert!((depolarising_report(0.3, 3).unwrap().threshold - 5.0 / 12.0).abs() < 1e-15);
        let r = depolarising_report(0.8, 2).unwrap();
        let (lo, hi) = r.sandwich.unwrap();
        assert!((lo - 0.36).abs() < 1e-12 && (hi - 0.6).abs() < 1e-12);
        assert!(depolarising_report(1.2, 2).is_err());
    }

    #[test]
    fn eb_anchor_identity() {
        let cfg = Config::default();
        let v = eb_robustness_ub(&Channel::identity(2), &cfg).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn probe_lb_of_identity_is_positive() {
        let cfg = Config::default();
        let f = ProbeFamily::xyz(2, &cfg).unwrap();
        let lb = restricted_robustness_lb(&Channel::identity(2), &f, &cfg).unwrap();
        assert!(lb > 0.1 && lb <= 1.0 + 1e-6, "{lb}");
        let free = restricted_robustness_lb(&Channel::depolarising(0.5, 2).unwrap(), &f, &cfg).unwrap();
        assert!(free.abs() < 1e-6, "{free}");
    }
}
