use ipres_core::game::{gamma_reduce, score, witness_bound};
use ipres_core::ops::{apply_ao, golden_rule_check, random_ao, AoParams, Warrant};
use ipres_core::preservability::{eb_robustness_ub, restricted_robustness_lb, ProbeFamily};
use ipres_core::quantum::random::{random_channel, random_effect, random_filter, random_state, seeded};
use ipres_core::{Channel, ComplexMatrix, Config, Effect, Filter, QState};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::Sink;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    GoldenRule,
    Gamma,
    Monotonicity,
    Witness,
    All,
}

impl Suite {
    fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::GoldenRule, Suite::Gamma, Suite::Monotonicity, Suite::Witness],
            s => vec![s],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Suite::GoldenRule => "golden-rule",
            Suite::Gamma => "gamma",
            Suite::Monotonicity => "monotonicity",
            Suite::Witness => "witness",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub trials: usize,
    /// Worst observed value of the suite's statistic.
    pub worst: f64,
    /// What the statistic is, and the bound it must respect.
    pub statistic: String,
    pub pass: bool,
}

fn eb_base(seed: u64, tol: &ipres_core::Tolerances) -> CliResult<(Channel, Warrant)> {
    let mut rng = seeded(seed);
    let e = random_effect::<f64, _>(2, &mut rng);
    let povm = vec![e.clone(), Effect::new(&ComplexMatrix::identity(2) - e.matrix(), tol)?];
    let states: Vec<QState> = (0..2).map(|_| random_state(2, &mut rng)).collect();
    let n = Channel::measure_prepare(&povm, &states, tol)?;
    Ok((n, Warrant::MeasurePrepare { povm, states }))
}

fn extra_channels(extra: Option<&Channel>) -> Vec<Channel> {
    extra.into_iter().filter(|c| c.dim_in() == 2 && c.dim_out() == 2).cloned().collect()
}

fn worst_of(values: Vec<f64>, max: bool) -> f64 {
    let init = if max { f64::NEG_INFINITY } else { f64::INFINITY };
    values.into_iter().fold(init, if max { f64::max } else { f64::min })
}

fn golden_rule(seeds: &[u64], cfg: &Config) -> CliResult<SuiteSummary> {
    let probes = ProbeFamily::xyz(2, cfg)?;
    let bases = [eb_base(1, &cfg.tol)?,
        eb_base(2, &cfg.tol)?,
        (Channel::depolarising(0.3, 2)?, Warrant::PptQubit)];
    let margins = seeds
        .par_iter()
        .map(|&s| {
            let f = random_ao(s, AoParams::default())?;
            bases
                .iter()
                .map(|(l, w)| Ok(golden_rule_check(&f, l, Some(w), &probes, cfg)?.worst_margin))
                .collect::<CliResult<Vec<f64>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    let margins: Vec<f64> = margins.into_iter().flatten().collect();
    let trials = margins.len();
    let worst = worst_of(margins, false);
    Ok(SuiteSummary {
        suite: Suite::GoldenRule.name().into(),
        trials,
        worst,
        statistic: format!("min JM margin of f(l), must be >= -{:e}", cfg.tol.feas),
        pass: worst >= -cfg.tol.feas,
    })
}

fn gamma(seeds: &[u64], extra: Option<&Channel>) -> CliResult<SuiteSummary> {
    let fixed = extra_channels(extra);
    let res = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = seeded(s);
            let mut ns: Vec<Channel> = vec![random_channel(2, 2, 1 + s as usize % 3, &mut rng)];
            ns.extend(fixed.iter().cloned());
            let k: Filter = random_filter(4, 1 + s as usize % 4, &mut rng);
            let g = gamma_reduce(&k);
            ns.iter()
                .map(|n| Ok((score(n, &k)?.value - score(n, &g)?.value).abs()))
                .collect::<CliResult<Vec<f64>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    let res: Vec<f64> = res.into_iter().flatten().collect();
    let trials = res.len();
    let worst = worst_of(res, true);
    Ok(SuiteSummary {
        suite: Suite::Gamma.name().into(),
        trials,
        worst,
        statistic: "max |score(K) - score(gamma(K))|, must be <= 1e-9".into(),
        pass: worst <= 1e-9,
    })
}

fn monotonicity(seeds: &[u64], extra: Option<&Channel>, cfg: &Config) -> CliResult<SuiteSummary> {
    let probes = ProbeFamily::xyz(2, cfg)?;
    let fixed = extra_channels(extra);
    let res = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = seeded(s);
            let mut ns: Vec<Channel> = vec![random_channel(2, 2, 1 + s as usize % 2, &mut rng)];
            ns.extend(fixed.iter().cloned());
            let f = random_ao(s.wrapping_add(1 << 32), AoParams::default())?;
            ns.iter()
                .map(|n| {
                    let image = apply_ao(&f, n)?;
                    let before = eb_robustness_ub(n, cfg)?;
                    let after = eb_robustness_ub(&image, cfg)?;
                    let lb = restricted_robustness_lb(&image, &probes, cfg)?;
                    Ok((after - before).max(lb - before))
                })
                .collect::<CliResult<Vec<f64>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    let res: Vec<f64> = res.into_iter().flatten().collect();
    let trials = res.len();
    let worst = worst_of(res, true);
    Ok(SuiteSummary {
        suite: Suite::Monotonicity.name().into(),
        trials,
        worst,
        statistic: "max of UB(f(N)) - UB(N) and LB(f(N)) - UB(N), must be <= 1e-6".into(),
        pass: worst <= 1e-6,
    })
}

fn witness(seeds: &[u64], extra: Option<&Channel>, cfg: &Config) -> CliResult<SuiteSummary> {
    let probes = ProbeFamily::xyz(2, cfg)?;
    let mut channels = vec![Channel::identity(2), Channel::depolarising(0.9, 2)?];
    channels.extend(extra_channels(extra));
    channels.extend(seeds.iter().map(|&s| random_channel(2, 2, 2, &mut seeded(s))));
    let gaps = channels
        .par_iter()
        .map(|n| {
            let lb = restricted_robustness_lb(n, &probes, cfg)?;
            let w = witness_bound(n, &probes, cfg)?;
            Ok((w.ratio_lb - 1.0 - lb).abs())
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let trials = gaps.len();
    let worst = worst_of(gaps, true);
    Ok(SuiteSummary {
        suite: Suite::Witness.name().into(),
        trials,
        worst,
        statistic: "max |witness ratio - 1 - relaxed robustness|, must be <= 1e-5".into(),
        pass: worst <= 1e-5,
    })
}

pub fn run(suite: Suite, trials: usize, channel: Option<&Channel>, cfg: &RunConfig) -> CliResult<()> {
    let core = cfg.core_config()?;
    let seeds = cfg.seeds.clone().unwrap_or_else(|| (0..trials as u64).collect());
    if seeds.is_empty() {
        return Err(CliError::Input("no seeds to run".into()));
    }
    let pool = cfg.thread_pool()?;
    let summaries = pool.install(|| {
        suite
            .expand()
            .into_iter()
            .map(|s| match s {
                Suite::GoldenRule => golden_rule(&seeds, &core),
                Suite::Gamma => gamma(&seeds, channel),
                Suite::Monotonicity => monotonicity(&seeds, channel, &core),
                Suite::Witness => witness(&seeds, channel, &core),
                Suite::All => unreachable!("expanded above"),
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    let machine_on_stdout = cfg.format.is_some() && cfg.output.is_none();
    for s in &summaries {
        let line = format!(
            "{} {}: {} trials, worst {:.3e} ({})",
            if s.pass { "PASS" } else { "FAIL" },
            s.suite,
            s.trials,
            s.worst,
            s.statistic
        );
        if machine_on_stdout {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }
    if cfg.format.is_some() || cfg.output.is_some() {
        Sink::new(cfg).emit(cfg.format.unwrap_or(Format::Json), &summaries)?;
    }
    let failed: Vec<&str> = summaries.iter().filter(|s| !s.pass).map(|s| s.suite.as_str()).collect();
    if !failed.is_empty() {
        return Err(CliError::Inconsistency(format!("suite {} violated", failed.join(", "))));
    }
    Ok(())
}
