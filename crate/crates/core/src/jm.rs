//! Joint measurability of measurement assemblages.
//!
//! `{E_{a|x}}` is jointly measurable when `E_{a|x} = Σ_λ D(a|x,λ) G_λ` for a
//! single POVM `{G_λ}` and deterministic responses `D`. The decision SDP
//! maximizes a slack `s` subject to `G_λ ⪰ s𝕀`.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::quantum::channel::cplx;
use crate::quantum::{Effect, MeasurementAssemblage};
use crate::scalar::Real;
use crate::sdp::{self, CMat, LinExpr, MatExpr, SdpBuilder, VarId};

type Assemblage = MeasurementAssemblage<f64>;

/// `D(a|x,λ) = [table[x] = a]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicResponse {
    pub table: Vec<usize>,
}

impl DeterministicResponse {
    pub fn value(&self, a: usize, x: usize) -> f64 {
        if self.table[x] == a { 1.0 } else { 0.0 }
    }
}

/// All outcome tuples in lexicographic order, last setting fastest.
pub fn deterministic_responses(outcome_counts: &[usize], cap: usize) -> Result<Vec<DeterministicResponse>> {
    if outcome_counts.contains(&0) {
        return Err(Error::InvalidParameter("outcome counts must be positive".into()));
    }
    let mut total: usize = 1;
    for &c in outcome_counts {
        total = total
            .checked_mul(c)
            .filter(|&t| t <= cap)
            .ok_or_else(|| Error::TooLarge(format!("response count exceeds cap {cap} for {outcome_counts:?}")))?;
    }
    let mut out = Vec::with_capacity(total);
    let mut tuple = vec![0usize; outcome_counts.len()];
    for _ in 0..total {
        out.push(DeterministicResponse { table: tuple.clone() });
        for x in (0..tuple.len()).rev() {
            tuple[x] += 1;
            if tuple[x] < outcome_counts[x] {
                break;
            }
            tuple[x] = 0;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Responses {
    Deterministic(Vec<DeterministicResponse>),
    /// `table[λ][x][a] = P(a|x,λ)`.
    Stochastic(Vec<Vec<Vec<f64>>>),
}

/// Parent POVM `{G_λ}` with response functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentPovm {
    pub effects: Vec<Effect<f64>>,
    pub responses: Responses,
}

impl ParentPovm {
    /// Validates positivity, normalization and the response tables.
    pub fn new(effects: Vec<Effect<f64>>, responses: Responses, cfg: &Config) -> Result<Self> {
        let p = Self { effects, responses };
        p.validate(cfg)?;
        Ok(p)
    }

    pub fn validate(&self, cfg: &Config) -> Result<()> {
        let n = self.effects.len();
        if n == 0 {
            return Err(Error::InvalidCertificate("parent POVM has no effects".into()));
        }
        let dim = self.effects[0].dim();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for g in &self.effects {
            if g.dim() != dim {
                return Err(Error::InvalidCertificate("parent effects differ in dimension".into()));
            }
            let min = g.matrix().min_eigenvalue_h();
            if min < -cfg.tol.psd {
                return Err(Error::InvalidCertificate(format!("parent effect eigenvalue {min:e}")));
            }
            sum += g.matrix();
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if dev > cfg.tol.tp {
            return Err(Error::InvalidCertificate(format!("parent POVM sums to 𝕀 only within {dev:e}")));
        }
        match &self.responses {
            Responses::Deterministic(r) => {
                if r.len() != n {
                    return Err(Error::InvalidCertificate("response count differs from parent size".into()));
                }
                if r.windows(2).any(|w| w[0].table.len() != w[1].table.len()) {
                    return Err(Error::InvalidCertificate("response tables differ in length".into()));
                }
            }
            Responses::Stochastic(t) => {
                if t.len() != n {
                    return Err(Error::InvalidCertificate("response count differs from parent size".into()));
                }
                for row in t.iter().flatten() {
                    let s: f64 = row.iter().sum();
                    if row.iter().any(|&v| v < -1e-12) || (s - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidCertificate("response row is not a distribution".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn probability(&self, lambda: usize, a: usize, x: usize) -> f64 {
        match &self.responses {
            Responses::Deterministic(r) => r[lambda].value(a, x),
            Responses::Stochastic(t) => t[lambda][x].get(a).copied().unwrap_or(0.0),
        }
    }

    /// `Σ_λ P(a|x,λ) G_λ` for the given outcome counts.
    pub fn reconstruct(&self, outcome_counts: &[usize]) -> Vec<Vec<CMat>> {
        let dim = self.effects[0].dim();
        outcome_counts
            .iter()
            .enumerate()
            .map(|(x, &na)| {
                (0..na)
                    .map(|a| {
                        let mut m = ComplexMatrix::zeros(dim, dim);
                        for (l, g) in self.effects.iter().enumerate() {
                            let p = self.probability(l, a, x);
                            if p != 0.0 {
                                m += &g.matrix().scale(p);
                            }
                        }
                        m
                    })
                    .collect()
            })
            .collect()
    }

    /// Largest entry-wise deviation between the reconstruction and `e`.
    pub fn reconstruction_residual(&self, e: &Assemblage) -> f64 {
        let rec = self.reconstruct(&e.outcome_counts());
        let mut worst = 0.0f64;
        for (x, povm) in e.settings().iter().enumerate() {
            for (a, eff) in povm.iter().enumerate() {
                worst = worst.max(rec[x][a].max_abs_diff(eff.matrix()));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JmVerdict {
    pub jm: bool,
    pub certificate: Option<ParentPovm>,
    /// Optimal slack `s` of `G_λ ⪰ s𝕀`.
    pub margin: f64,
}

/// Adds parent variables `G_λ ⪰ 0` (shifted by `slack · 𝕀` if given) with
/// `Σ_{λ: λ_x = a} G_λ = effects[x][a]`.
pub(crate) fn add_parent_constraints(
    b: &mut SdpBuilder,
    effects: &[Vec<MatExpr>],
    dim: usize,
    responses: &[DeterministicResponse],
    prefix: &str,
    slack: Option<VarId>,
) -> Result<Vec<VarId>> {
    let vars: Vec<VarId> = (0..responses.len())
        .map(|l| b.var(format!("{prefix}G{l}"), dim, true))
        .collect();
    let n = responses.len();
    for (x, povm) in effects.iter().enumerate() {
        let na = povm.len();
        for (a, target) in povm.iter().enumerate() {
            let mut lhs = MatExpr::zeros(dim, dim);
            for (l, r) in responses.iter().enumerate() {
                if r.table[x] == a {
                    lhs.add_assign(&MatExpr::var(vars[l], dim))?;
                }
            }
            if let Some(s) = slack {
                lhs.add_assign(&MatExpr::scalar_identity(s, dim).scaled((n / na) as f64))?;
            }
            b.eq_matrix(&lhs, target, &format!("{prefix}x{x}a{a}"))?;
        }
    }
    Ok(vars)
}

fn constant_effects(e: &Assemblage) -> Vec<Vec<MatExpr>> {
    e.settings()
        .iter()
        .map(|povm| povm.iter().map(|eff| MatExpr::constant(eff.matrix())).collect())
        .collect()
}

fn single_setting_verdict(e: &Assemblage) -> JmVerdict {
    let povm = &e.settings()[0];
    let responses = (0..povm.len()).map(|a| DeterministicResponse { table: vec![a] }).collect();
    let margin = povm.iter().map(|g| g.matrix().min_eigenvalue_h()).fold(f64::INFINITY, f64::min);
    JmVerdict {
        jm: true,
        certificate: Some(ParentPovm {
            effects: povm.clone(),
            responses: Responses::Deterministic(responses),
        }),
        margin,
    }
}

fn slack_problem(e: &Assemblage, responses: &[DeterministicResponse]) -> Result<sdp::SdpProblem> {
    let mut b = SdpBuilder::new();
    let s = b.var("s", 1, false);
    add_parent_constraints(&mut b, &constant_effects(e), e.dim(), responses, "", Some(s))?;
    b.maximize(LinExpr::entry(s, 0, 0));
    Ok(b.build())
}

pub fn jm_decide(e: &Assemblage, cfg: &Config) -> Result<JmVerdict> {
    if e.num_settings() == 1 {
        return Ok(single_setting_verdict(e));
    }
    let responses = deterministic_responses(&e.outcome_counts(), cfg.response_cap)?;
    let problem = slack_problem(e, &responses)?;
    sdp::dump_problem(&problem, cfg.dump_dir.as_deref(), "jm_decide")?;
    let sol = sdp::solve(&problem, cfg.solver.as_ref())?.require_optimal()?;
    let s = sol.value;
    if s < -cfg.tol.feas {
        return Ok(JmVerdict {
            jm: false,
            certificate: None,
            margin: s,
        });
    }
    let d = e.dim();
    let shift = ComplexMatrix::identity(d).scale(s);
    let raw: Vec<CMat> = (0..responses.len())
        .map(|l| Ok(sol.primal(&format!("G{l}"))?.hermitian_part()))
        .collect::<Result<_>>()?;
    let mut effects: Vec<CMat> = raw.iter().map(|p| p + &shift).collect();
    if s < 0.0 {
        // rescaled P_λ is exactly positive and still sums to 𝕀 up to solver residuals
        let scale = 1.0 / (1.0 - responses.len() as f64 * s);
        effects = raw.iter().map(|p| p.psd_part().scale(scale)).collect();
    }
    let polished = polish(&effects, &responses, e);
    if polished.iter().all(|g| g.min_eigenvalue_h() >= -cfg.tol.psd) {
        effects = polished;
    }
    let cert = ParentPovm {
        effects: effects.into_iter().map(Effect::from_matrix_unchecked).collect(),
        responses: Responses::Deterministic(responses),
    };
    let residual = cert.reconstruction_residual(e);
    if residual > cfg.tol.cert {
        return Err(Error::InternalInconsistency(format!(
            "JM certificate reconstructs the assemblage only within {residual:e}"
        )));
    }
    Ok(JmVerdict {
        jm: true,
        certificate: Some(cert),
        margin: s,
    })
}

/// Least-change correction making `Σ_{λ: λ_x = a} G_λ = E_{a|x}` hold to
/// rounding error. With residuals `R_{a|x}` and `Q = Σ_a R_{a|x}` it adds
/// `Σ_x R_{λ_x|x}/n_x − (m − 1) Q/N` to each `G_λ`, where `n_x = N/|A_x|`.
fn polish(effects: &[CMat], responses: &[DeterministicResponse], e: &Assemblage) -> Vec<CMat> {
    let d = e.dim();
    let n = responses.len();
    let counts = e.outcome_counts();
    let m = counts.len();
    let mut residual: Vec<Vec<CMat>> = e
        .settings()
        .iter()
        .map(|povm| povm.iter().map(|eff| eff.matrix().clone()).collect())
        .collect();
    for (g, r) in effects.iter().zip(responses) {
        for (x, &a) in r.table.iter().enumerate() {
            residual[x][a] = &residual[x][a] - g;
        }
    }
    let mut q = ComplexMatrix::zeros(d, d);
    for row in &residual {
        for r in row {
            q += r;
        }
    }
    let q = q.scale(1.0 / m as f64);
    let common = q.scale((m as f64 - 1.0) / n as f64);
    effects
        .iter()
        .zip(responses)
        .map(|(g, r)| {
            let mut out = g - &common;
            for (x, &a) in r.table.iter().enumerate() {
                out += &residual[x][a].scale(counts[x] as f64 / n as f64);
            }
            out.hermitian_part()
        })
        .collect()
}

/// Largest `η ∈ [0, 1]` for which `η E + (1 − η) tr(E) 𝕀/d` is JM, from a
/// single SDP with `η` as a variable.
pub fn jm_visibility(e: &Assemblage, cfg: &Config) -> Result<f64> {
    if e.num_settings() == 1 {
        return Ok(1.0);
    }
    let d = e.dim();
    let responses = deterministic_responses(&e.outcome_counts(), cfg.response_cap)?;
    let mut b = SdpBuilder::new();
    let eta = b.var("eta", 1, true);
    let room = b.var("room", 1, true);
    b.eq(
        &(&LinExpr::entry(eta, 0, 0) + &LinExpr::entry(room, 0, 0)),
        &LinExpr::constant(1.0.into()),
    );
    let eta_e = LinExpr::entry(eta, 0, 0);
    let targets: Vec<Vec<MatExpr>> = e
        .settings()
        .iter()
        .map(|povm| {
            povm.iter()
                .map(|eff| {
                    let m = eff.matrix();
                    let noise = ComplexMatrix::identity(d).scale(m.trace().re / d as f64);
                    MatExpr::scalar_times(&eta_e, &(m - &noise))
                        .add(&MatExpr::constant(&noise))
                        .expect("same shape")
                })
                .collect()
        })
        .collect();
    add_parent_constraints(&mut b, &targets, d, &responses, "", None)?;
    b.maximize(eta_e.clone());
    let problem = b.build();
    sdp::dump_problem(&problem, cfg.dump_dir.as_deref(), "jm_visibility")?;
    let sol = sdp::solve(&problem, cfg.solver.as_ref())?.require_optimal()?;
    Ok(sol.value.clamp(0.0, 1.0))
}

/// Visibility threshold by bisection over `jm_decide`'s slack problem.
pub fn jm_visibility_bisection(e: &Assemblage, tol: f64, cfg: &Config) -> Result<f64> {
    if e.num_settings() == 1 {
        return Ok(1.0);
    }
    let responses = deterministic_responses(&e.outcome_counts(), cfg.response_cap)?;
    let family = |eta: f64| slack_problem(&e.depolarised(eta), &responses);
    let top = sdp::solve(&family(1.0)?, cfg.solver.as_ref())?.require_optimal()?;
    if top.value >= -cfg.tol.feas {
        return Ok(1.0);
    }
    Ok(sdp::bisect_feasibility(family, 0.0, 1.0, tol, cfg.tol.feas, cfg.solver.as_ref())?.boundary)
}

fn basis_projectors<T: Real>(vectors: &[Vec<num_complex::Complex<T>>]) -> Vec<Effect<T>> {
    vectors
        .iter()
        .map(|v| Effect::from_matrix_unchecked(ComplexMatrix::outer(v)))
        .collect()
}

/// Qubit Pauli assemblage: settings Z, X and, with `with_y`, Y.
pub fn pauli_assemblage<T: Real>(with_y: bool) -> MeasurementAssemblage<T> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = vec![vec![cplx(1.0, 0.0), cplx(0.0, 0.0)], vec![cplx(0.0, 0.0), cplx(1.0, 0.0)]];
    let x = vec![vec![cplx(h, 0.0), cplx(h, 0.0)], vec![cplx(h, 0.0), cplx(-h, 0.0)]];
    let y = vec![vec![cplx(h, 0.0), cplx(0.0, h)], vec![cplx(h, 0.0), cplx(0.0, -h)]];
    let mut settings = vec![basis_projectors(&z), basis_projectors(&x)];
    if with_y {
        settings.push(basis_projectors(&y));
    }
    MeasurementAssemblage::from_parts_unchecked(2, settings)
}

/// The first `count` of the `d + 1` standard mutually unbiased bases for
/// `d ∈ {2, 3}`: the computational basis followed by `Σ_n ω^{k n² + j n}|n⟩/√d`
/// (for `d = 2` these are X and Y).
pub fn mub_bases<T: Real>(d: usize, count: usize) -> Result<MeasurementAssemblage<T>> {
    if d != 2 && d != 3 {
        return Err(Error::InvalidParameter(format!("MUBs are built for d ∈ {{2, 3}}, got {d}")));
    }
    if count == 0 || count > d + 1 {
        return Err(Error::InvalidParameter(format!("{count} bases requested, {} exist", d + 1)));
    }
    if d == 2 {
        return pauli_assemblage::<T>(true).select(&(0..count).collect::<Vec<_>>());
    }
    let norm = 1.0 / (d as f64).sqrt();
    let mut settings = Vec::with_capacity(count);
    let computational: Vec<Vec<_>> = (0..d)
        .map(|j| (0..d).map(|n| cplx(if n == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect();
    settings.push(basis_projectors(&computational));
    for k in 0..count - 1 {
        let vecs: Vec<Vec<_>> = (0..d)
            .map(|j| {
                (0..d)
                    .map(|n| {
                        let phase = 2.0 * std::f64::consts::PI * ((k * n * n + j * n) % d) as f64 / d as f64;
                        cplx(norm * phase.cos(), norm * phase.sin())
                    })
                    .collect()
            })
            .collect();
        settings.push(basis_projectors(&vecs));
    }
    Ok(MeasurementAssemblage::from_parts_unchecked(d, settings))
}

/// Complete set of `d + 1` MUBs.
pub fn mub_assemblage<T: Real>(d: usize) -> Result<MeasurementAssemblage<T>> {
    mub_bases(d, d + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_enumeration_order() {
        let r = deterministic_responses(&[2, 2], 4096).unwrap();
        let tables: Vec<Vec<usize>> = r.into_iter().map(|r| r.table).collect();
        assert_eq!(tables, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(deterministic_responses(&[2, 2, 2], 4096).unwrap().len(), 8);
        assert_eq!(deterministic_responses(&[3, 2], 4096).unwrap().len(), 6);
        assert!(matches!(deterministic_responses(&[4; 7], 4096), Err(Error::TooLarge(_))));
    }

    #[test]
    fn pauli_pair_is_incompatible() {
        let v = jm_decide(&pauli_assemblage(false), &Config::default()).unwrap();
        assert!(!v.jm && v.certificate.is_none() && v.margin < -1e-3);
    }

    #[test]
    fn commuting_pair_is_compatible() {
        let cfg = Config::default();
        let z = pauli_assemblage::<f64>(false).select(&[0, 0]).unwrap();
        let v = jm_decide(&z, &cfg).unwrap();
        assert!(v.jm);
        assert!(v.certificate.unwrap().reconstruction_residual(&z) < 1e-6);
    }

    #[test]
    fn visibility_of_pauli_sets() {
        let cfg = Config::default();
        let xz = jm_visibility(&pauli_assemblage(false), &cfg).unwrap();
        let xyz = jm_visibility(&pauli_assemblage(true), &cfg).unwrap();
        assert!((xz - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4, "{xz}");
        assert!((xyz - 1.0 / 3f64.sqrt()).abs() < 1e-4, "{xyz}");
    }

    #[test]
    fn mub_overlaps_d3() {
        let m = mub_assemblage::<f64>(3).unwrap();
        assert_eq!(m.num_settings(), 4);
        for x in 0..4 {
            for y in (x + 1)..4 {
                for a in 0..3 {
                    for b in 0..3 {
                        let o = m.effect(a, x).matrix().trace_product(m.effect(b, y).matrix()).re;
                        assert!((o - 1.0 / 3.0).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
