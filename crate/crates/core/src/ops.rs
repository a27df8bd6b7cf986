//! Allowed operations `N ↦ Σ_μ p_μ Σ_k D_{k|μ} ∘ N ∘ F_{k|μ}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::jm::{ParentPovm, Responses};
use crate::linalg::ComplexMatrix;
use crate::preservability::{probe_ia_test, IaCertificateReport, IaConclusion, ProbeFamily};
use crate::quantum::random::{random_channel, seeded};
use crate::quantum::{Channel, Effect, Filter, MeasurementAssemblage, QState};
use crate::sdp::CMat;

type Assemblage = MeasurementAssemblage<f64>;

/// Filters `{F_k}` whose sum is a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    branches: Vec<Filter<f64>>,
}

impl Instrument {
    pub fn new(branches: Vec<Filter<f64>>, cfg: &Config) -> Result<Self> {
        let Some(first) = branches.first() else {
            return Err(Error::InvalidParameter("instrument needs at least one branch".into()));
        };
        let d = first.dim();
        let mut sum = ComplexMatrix::zeros(d, d);
        for f in &branches {
            if f.dim() != d {
                return Err(Error::InvalidShape("instrument branches differ in dimension".into()));
            }
            sum += &f.effect_operator();
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if dev > cfg.tol.tp {
            return Err(Error::NotAChannel(format!("instrument branches sum to 𝕀 only within {dev:e}")));
        }
        Ok(Self { branches })
    }

    /// Re-checks completeness, e.g. after deserialization.
    pub fn validate(&self, cfg: &Config) -> Result<()> {
        Self::new(self.branches.clone(), cfg).map(|_| ())
    }

    pub fn trivial(d: usize) -> Self {
        Self {
            branches: vec![Filter::identity(d)],
        }
    }

    pub fn branches(&self) -> &[Filter<f64>] {
        &self.branches
    }

    pub fn dim(&self) -> usize {
        self.branches[0].dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllowedOperation {
    weights: Vec<f64>,
    instruments: Vec<Instrument>,
    post_channels: Vec<Vec<Channel<f64>>>,
}

impl AllowedOperation {
    pub fn new(
        weights: Vec<f64>,
        instruments: Vec<Instrument>,
        post_channels: Vec<Vec<Channel<f64>>>,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != instruments.len() || weights.len() != post_channels.len() {
            return Err(Error::InvalidParameter("weights, instruments and post-channels differ in length".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("weights sum to {total}")));
        }
        let d_in = instruments[0].dim();
        let first_post = post_channels[0]
            .first()
            .ok_or_else(|| Error::InvalidParameter("missing post-channels".into()))?;
        let (mid, d_out) = (first_post.dim_in(), first_post.dim_out());
        for (inst, posts) in instruments.iter().zip(&post_channels) {
            if inst.dim() != d_in {
                return Err(Error::InvalidShape("instruments differ in dimension".into()));
            }
            if inst.branches().len() != posts.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} branches but {} post-channels",
                    inst.branches().len(),
                    posts.len()
                )));
            }
            if posts.iter().any(|c| c.dim_in() != mid || c.dim_out() != d_out) {
                return Err(Error::InvalidShape("post-channels differ in shape".into()));
            }
        }
        Ok(Self {
            weights,
            instruments,
            post_channels,
        })
    }

    /// Full invariant check, including instrument completeness.
    pub fn validate(&self, cfg: &Config) -> Result<()> {
        Self::new(self.weights.clone(), self.instruments.clone(), self.post_channels.clone())?;
        self.instruments.iter().try_for_each(|i| i.validate(cfg))
    }

    pub fn identity(d: usize) -> Self {
        Self {
            weights: vec![1.0],
            instruments: vec![Instrument::trivial(d)],
            post_channels: vec![vec![Channel::identity(d)]],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn instruments(&self) -> &[Instrument] {
        &self.instruments
    }

    pub fn post_channels(&self) -> &[Vec<Channel<f64>>] {
        &self.post_channels
    }

    pub fn dim_in(&self) -> usize {
        self.instruments[0].dim()
    }

    /// Input dimension of the post-channels.
    pub fn dim_mid(&self) -> usize {
        self.post_channels[0][0].dim_in()
    }

    pub fn dim_out(&self) -> usize {
        self.post_channels[0][0].dim_out()
    }

    /// The operation `N ↦ next(self(N))`.
    pub fn then(&self, next: &AllowedOperation) -> Result<Self> {
        if next.dim_in() != self.dim_in() || next.dim_mid() != self.dim_out() {
            return Err(Error::InvalidShape("operations do not compose".into()));
        }
        let mut weights = Vec::new();
        let mut instruments = Vec::new();
        let mut posts = Vec::new();
        for (mu, (inst, post)) in self.instruments.iter().zip(&self.post_channels).enumerate() {
            for (nu, (inst2, post2)) in next.instruments.iter().zip(&next.post_channels).enumerate() {
                let mut branches = Vec::new();
                let mut chans = Vec::new();
                for (f, d) in inst.branches().iter().zip(post) {
                    for (f2, d2) in inst2.branches().iter().zip(post2) {
                        branches.push(f.after(f2)?);
                        chans.push(d.then(d2)?);
                    }
                }
                weights.push(self.weights[mu] * next.weights[nu]);
                instruments.push(Instrument { branches });
                posts.push(chans);
            }
        }
        Self::new(weights, instruments, posts)
    }
}

/// `Σ_μ p_μ Σ_k D_{k|μ} ∘ N ∘ F_{k|μ}`, composed on Kraus operators.
pub fn apply_ao(f: &AllowedOperation, n: &Channel<f64>) -> Result<Channel<f64>> {
    if n.dim_in() != f.dim_in() || n.dim_out() != f.dim_mid() {
        return Err(Error::InvalidShape(format!(
            "operation {}→{}→{} cannot act on channel {}→{}",
            f.dim_in(),
            f.dim_mid(),
            f.dim_out(),
            n.dim_in(),
            n.dim_out()
        )));
    }
    let mut kraus = Vec::new();
    for ((&p, inst), posts) in f.weights.iter().zip(&f.instruments).zip(&f.post_channels) {
        if p == 0.0 {
            continue;
        }
        let s = p.sqrt();
        for (filter, post) in inst.branches().iter().zip(posts) {
            if filter.is_zero() {
                continue;
            }
            for a in filter.kraus() {
                for k in n.kraus() {
                    let ka = k * a;
                    for d in post.kraus() {
                        kraus.push((d * &ka).scale(s));
                    }
                }
            }
        }
    }
    Channel::compressed(kraus, f.dim_in(), f.dim_out())
}

/// Evidence that a channel is incompatibility-annihilating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warrant {
    /// Qubit channel with PPT (hence separable) Choi state.
    PptQubit,
    /// Explicit measure-and-prepare form `Σ_k tr(M_k ·) σ_k`.
    MeasurePrepare {
        povm: Vec<Effect<f64>>,
        states: Vec<QState<f64>>,
    },
}

impl Warrant {
    pub fn validate(&self, l: &Channel<f64>, cfg: &Config) -> Result<()> {
        match self {
            Warrant::PptQubit => {
                if l.dim_in() != 2 || l.dim_out() != 2 {
                    return Err(Error::UncheckedPremise("PPT warrant applies to qubit channels only".into()));
                }
                let min = l.choi_ppt_min_eigenvalue();
                if min < -cfg.tol.psd {
                    return Err(Error::UncheckedPremise(format!(
                        "Choi partial transpose has eigenvalue {min:e}"
                    )));
                }
                Ok(())
            }
            Warrant::MeasurePrepare { povm, states } => {
                let mp = Channel::measure_prepare(povm, states, &cfg.tol)
                    .map_err(|e| Error::UncheckedPremise(format!("measure-prepare form invalid: {e}")))?;
                let dist = mp.choi_matrix().max_abs_diff(l.choi_matrix());
                if mp.dim_in() != l.dim_in() || mp.dim_out() != l.dim_out() || dist > cfg.tol.rep {
                    return Err(Error::UncheckedPremise(format!(
                        "measure-prepare form differs from the channel by {dist:e}"
                    )));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenRuleReport {
    pub pass: bool,
    pub report: IaCertificateReport,
    /// Smallest JM margin over the probes.
    pub worst_margin: f64,
    /// First probe whose pushforward was incompatible.
    pub offending_probe: Option<usize>,
}

/// Checks that `f(l)` shows no incompatibility on the probes, for a channel
/// `l` carrying a free-set warrant.
pub fn golden_rule_check(
    f: &AllowedOperation,
    l: &Channel<f64>,
    warrant: Option<&Warrant>,
    probes: &ProbeFamily,
    cfg: &Config,
) -> Result<GoldenRuleReport> {
    let Some(w) = warrant else {
        return Err(Error::UncheckedPremise("channel has no incompatibility-annihilating warrant".into()));
    };
    w.validate(l, cfg)?;
    let image = apply_ao(f, l)?;
    let report = probe_ia_test(&image, probes, cfg)?;
    let worst_margin = report.per_probe.iter().map(|v| v.margin).fold(f64::INFINITY, f64::min);
    let offending_probe = report.per_probe.iter().position(|v| !v.jm);
    Ok(GoldenRuleReport {
        pass: report.conclusion == IaConclusion::NoIncompatibilityDetected,
        report,
        worst_margin,
        offending_probe,
    })
}

fn response_tables(p: &ParentPovm) -> Result<Vec<Vec<usize>>> {
    match &p.responses {
        Responses::Deterministic(r) => Ok(r.iter().map(|r| r.table.clone()).collect()),
        Responses::Stochastic(_) => Err(Error::InvalidCertificate(
            "construction needs deterministic responses".into(),
        )),
    }
}

/// Parent POVM for the pushforward of `probe` through `f(base)`, assembled
/// from parents of the branch pushforwards `N†(D_{k|μ}†(E))`.
///
/// `jm_parents[μ][k]` must certify the branch pushforward with a shared
/// deterministic response list. Returns `W_{a|x} = Σ p_μ F_{k|μ}†(M^{(k|μ)}_{a|x})`
/// and `G̃_i = Σ p_μ F_{k|μ}†(G_i^{(k|μ)})`.
pub fn parent_after_ao(
    f: &AllowedOperation,
    base: &Channel<f64>,
    probe: &Assemblage,
    jm_parents: &[Vec<ParentPovm>],
    cfg: &Config,
) -> Result<(Assemblage, ParentPovm)> {
    if jm_parents.len() != f.weights.len()
        || jm_parents.iter().zip(&f.instruments).any(|(ps, i)| ps.len() != i.branches().len())
    {
        return Err(Error::InvalidCertificate("parents do not match the operation's branches".into()));
    }
    let tables = response_tables(&jm_parents[0][0])?;
    let d = f.dim_in();
    let counts = probe.outcome_counts();
    let mut w: Vec<Vec<CMat>> = counts.iter().map(|&na| vec![ComplexMatrix::zeros(d, d); na]).collect();
    let mut g_tilde = vec![ComplexMatrix::zeros(d, d); tables.len()];
    for (mu, ((&p, inst), posts)) in f.weights.iter().zip(&f.instruments).zip(&f.post_channels).enumerate() {
        for (k, (filter, post)) in inst.branches().iter().zip(posts).enumerate() {
            let parent = &jm_parents[mu][k];
            if response_tables(parent)? != tables {
                return Err(Error::InvalidCertificate(format!("parent ({mu}, {k}) uses different responses")));
            }
            let branch = base.pushforward(&post.pushforward(probe)?)?;
            let residual = parent.reconstruction_residual(&branch);
            if residual > cfg.tol.cert {
                return Err(Error::InvalidCertificate(format!(
                    "parent ({mu}, {k}) reconstructs its branch only within {residual:e}"
                )));
            }
            if p == 0.0 || filter.is_zero() {
                continue;
            }
            for (x, povm) in branch.settings().iter().enumerate() {
                for (a, m) in povm.iter().enumerate() {
                    w[x][a] += &filter.adjoint_apply(m.matrix())?.scale(p);
                }
            }
            for (i, g) in parent.effects.iter().enumerate() {
                g_tilde[i] += &filter.adjoint_apply(g.matrix())?.scale(p);
            }
        }
    }
    let w = MeasurementAssemblage::from_parts_unchecked(
        d,
        w.into_iter()
            .map(|povm| povm.into_iter().map(|m| Effect::from_matrix_unchecked(m.hermitian_part())).collect())
            .collect(),
    );
    let parent = ParentPovm {
        effects: g_tilde
            .into_iter()
            .map(|g| Effect::from_matrix_unchecked(g.hermitian_part()))
            .collect(),
        responses: jm_parents[0][0].responses.clone(),
    };
    parent.validate(cfg)?;
    let residual = parent.reconstruction_residual(&w);
    if residual > 1e-8 {
        return Err(Error::InvalidCertificate(format!("constructed parent misses W by {residual:e}")));
    }
    Ok((w, parent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AoParams {
    pub dim: usize,
    pub n_mu: usize,
    pub n_branches: usize,
    pub kraus_rank: usize,
}

impl Default for AoParams {
    fn default() -> Self {
        Self {
            dim: 2,
            n_mu: 2,
            n_branches: 2,
            kraus_rank: 2,
        }
    }
}

/// Random operation: each instrument splits a random channel's Kraus set
/// into branches; post-channels and weights are random too.
pub fn random_ao(seed: u64, params: AoParams) -> Result<AllowedOperation> {
    let AoParams {
        dim,
        n_mu,
        n_branches,
        kraus_rank,
    } = params;
    if !(1..=2).contains(&n_mu) || !(1..=2).contains(&n_branches) || !(1..=2).contains(&kraus_rank) || dim == 0 {
        return Err(Error::InvalidParameter(format!("parameters outside caps: {params:?}")));
    }
    let mut rng = seeded(seed);
    let mut instruments = Vec::with_capacity(n_mu);
    let mut posts = Vec::with_capacity(n_mu);
    let mut weights: Vec<f64> = (0..n_mu).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    // force an exact sum of 1
    let head: f64 = weights[..n_mu - 1].iter().sum();
    weights[n_mu - 1] = 1.0 - head;
    for _ in 0..n_mu {
        let source: Channel<f64> = random_channel(dim, dim, n_branches * kraus_rank, &mut rng);
        let branches = source
            .kraus()
            .chunks(kraus_rank)
            .map(|c| Filter::from_kraus_unchecked(dim, c.to_vec()))
            .collect();
        instruments.push(Instrument { branches });
        posts.push(
            (0..n_branches)
                .map(|_| random_channel(dim, dim, kraus_rank, &mut rng))
                .collect(),
        );
    }
    AllowedOperation::new(weights, instruments, posts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_ao_is_neutral() {
        let n: Channel<f64> = random_channel(2, 2, 3, &mut seeded(3));
        let out = apply_ao(&AllowedOperation::identity(2), &n).unwrap();
        assert!(out.choi_matrix().max_abs_diff(n.choi_matrix()) < 1e-12);
    }

    #[test]
    fn random_ao_is_reproducible() {
        let a = random_ao(9, AoParams::default()).unwrap();
        let b = random_ao(9, AoParams::default()).unwrap();
        assert_eq!(a, b);
        let out = apply_ao(&a, &Channel::identity(2)).unwrap();
        assert!(out.marginal_deviation() < 1e-10);
    }

    #[test]
    fn missing_warrant_is_rejected() {
        let cfg = Config::default();
        let f = ProbeFamily::xyz(2, &cfg).unwrap();
        let r = golden_rule_check(&AllowedOperation::identity(2), &Channel::identity(2), None, &f, &cfg);
        assert!(matches!(r, Err(Error::UncheckedPremise(_))));
        let r = golden_rule_check(
            &AllowedOperation::identity(2),
            &Channel::identity(2),
            Some(&Warrant::PptQubit),
            &f,
            &cfg,
        );
        assert!(matches!(r, Err(Error::UncheckedPremise(_))));
    }
}
