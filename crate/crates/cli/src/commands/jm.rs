use std::path::PathBuf;

use ipres_core::MeasurementAssemblage;
use ipres_core::jm::{jm_decide, jm_visibility, mub_assemblage, pauli_assemblage};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::Sink;

pub const BUILTINS: &[&str] = &["pauli-xz", "pauli-xyz", "mub-d2", "mub-d3"];

fn builtin(name: &str) -> CliResult<MeasurementAssemblage> {
    match name {
        "pauli-xz" => Ok(pauli_assemblage(false)),
        "pauli-xyz" => Ok(pauli_assemblage(true)),
        "mub-d2" => Ok(mub_assemblage(2)?),
        "mub-d3" => Ok(mub_assemblage(3)?),
        other => Err(CliError::Input(format!(
            "unknown builtin `{other}`; expected one of {}",
            BUILTINS.join(", ")
        ))),
    }
}

#[derive(Debug, Serialize)]
pub struct JmReport {
    pub source: String,
    pub dim: usize,
    pub settings: usize,
    pub jm: bool,
    pub margin: f64,
    pub visibility: f64,
}

pub fn run(builtin_name: Option<&str>, file: Option<&PathBuf>, cfg: &RunConfig) -> CliResult<()> {
    let (source, e) = match (builtin_name, file) {
        (Some(b), None) => (b.to_string(), builtin(b)?),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            let e: MeasurementAssemblage =
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            (p.display().to_string(), e)
        }
        _ => return Err(CliError::Input("give exactly one of --builtin or --file".into())),
    };
    let core = cfg.core_config()?;
    let verdict = jm_decide(&e, &core)?;
    let visibility = jm_visibility(&e, &core)?;
    let report = JmReport {
        source,
        dim: e.dim(),
        settings: e.num_settings(),
        jm: verdict.jm,
        margin: verdict.margin,
        visibility,
    };
    let line = format!(
        "{}, visibility {visibility:.4} (margin {:.3e})",
        if report.jm { "COMPATIBLE" } else { "INCOMPATIBLE" },
        report.margin
    );
    let sink = Sink::new(cfg);
    match cfg.format {
        Some(f) => {
            match f {
                Format::Json => sink.json(&report)?,
                Format::Csv => sink.csv(std::slice::from_ref(&report))?,
            }
            if sink.is_file() {
                println!("{line}");
            }
        }
        None => println!("{line}"),
    }
    Ok(())
}
