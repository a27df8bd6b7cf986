use ipres_core::game::{game_lb, game_lb_analytic, phi_plus_filter, witness_bound, GameBound};
use ipres_core::preservability::ProbeFamily;
use ipres_core::{Channel, Filter};
use serde::Deserialize;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::Sink;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Denominator {
    /// SDP over the probe-relaxed free set.
    Probe,
    /// The constant 5/8; qubit Φ⁺ filter only.
    Analytic,
}

/// `identity`, `depol:<p>`.
pub fn builtin_channel(name: &str, d: usize) -> CliResult<Channel> {
    if name == "identity" {
        return Ok(Channel::identity(d));
    }
    if let Some(p) = name.strip_prefix("depol:") {
        let p: f64 = p.parse().map_err(|e| CliError::Input(format!("`{p}`: {e}")))?;
        return Ok(Channel::depolarising(p, d)?);
    }
    Err(CliError::Input(format!("unknown channel `{name}`; expected identity or depol:<p>")))
}

#[derive(Deserialize)]
struct FilterFile {
    dim: usize,
    kraus: Vec<ipres_core::ComplexMatrix>,
}

pub fn load_filter(path: &std::path::Path, cfg: &RunConfig) -> CliResult<Filter> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let f: FilterFile = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(Filter::new(f.dim, f.kraus, &cfg.tolerances()?)?)
}

pub enum FilterChoice {
    PhiPlus,
    Witness,
    Given(Filter),
}

pub fn run(channel: &Channel, filter: FilterChoice, denominator: Denominator, cfg: &RunConfig) -> CliResult<()> {
    let core = cfg.core_config()?;
    let d = channel.dim()?;
    let probes = ProbeFamily::standard(cfg.probe_set(), d, &core)?;
    let bound: GameBound = match (filter, denominator) {
        (FilterChoice::Witness, Denominator::Probe) => witness_bound(channel, &probes, &core)?,
        (FilterChoice::Witness, Denominator::Analytic) => {
            return Err(CliError::Input("the analytic denominator needs the phi-plus filter".into()));
        }
        (choice, den) => {
            let k = match choice {
                FilterChoice::Given(k) => k,
                _ => phi_plus_filter(d),
            };
            match den {
                Denominator::Probe => game_lb(channel, &k, &probes, &core)?,
                Denominator::Analytic => game_lb_analytic(channel, &k, &core)?,
            }
        }
    };
    let line = format!(
        "ratio {:.4} = {:.6} / {:.6} ({}, status {})",
        bound.ratio_lb, bound.numerator, bound.denominator, bound.denominator_method, bound.status
    );
    let sink = Sink::new(cfg);
    match cfg.format {
        Some(Format::Json) => sink.json(&bound)?,
        Some(Format::Csv) => {
            #[derive(serde::Serialize)]
            struct Row<'a> {
                ratio_lb: f64,
                numerator: f64,
                denominator: f64,
                denominator_method: &'a str,
                status: &'a str,
            }
            sink.csv(&[Row {
                ratio_lb: bound.ratio_lb,
                numerator: bound.numerator,
                denominator: bound.denominator,
                denominator_method: &bound.denominator_method,
                status: &bound.status,
            }])?
        }
        None => {}
    }
    if cfg.format.is_none() || sink.is_file() {
        println!("{line}");
    }
    Ok(())
}
