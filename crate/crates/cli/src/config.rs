//! Run configuration: config file, then `IPRES_*` environment variables,
//! then command-line flags, each overriding the previous.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ipres_core::preservability::ProbeSet;
use ipres_core::{Config, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Jm,
    DepolScan,
    Verify,
    Game,
}

/// Schema shared by `--config` files and the resolved settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandKind>,
    pub dimension: Option<usize>,
    pub p_grid: Option<Vec<f64>>,
    pub probe_set: Option<ProbeSet>,
    pub seeds: Option<Vec<u64>>,
    pub tolerances: BTreeMap<String, f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` win.
    pub fn overlay(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(command, dimension, p_grid, probe_set, seeds, output, format, jobs, cache_dir);
        self.tolerances.extend(other.tolerances);
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension.unwrap_or(2)
    }

    pub fn probe_set(&self) -> ProbeSet {
        self.probe_set.unwrap_or(ProbeSet::Xyz)
    }

    pub fn p_grid(&self) -> Vec<f64> {
        self.p_grid.clone().unwrap_or_else(|| (0..=20).map(|i| i as f64 / 20.0).collect())
    }

    pub fn validate(&self) -> CliResult<()> {
        let d = self.dimension();
        if !(2..=3).contains(&d) {
            return Err(CliError::Input(format!("dimension {d} not supported (2 or 3)")));
        }
        if let Some(g) = &self.p_grid
            && (g.is_empty() || g.iter().any(|p| !(0.0..=1.0).contains(p))) {
                return Err(CliError::Input("p grid values must lie in [0, 1]".into()));
            }
        if self.probe_set().count(d) > d + 1 {
            return Err(CliError::Input(format!(
                "probe set `{}` needs more bases than exist at d = {d}",
                self.probe_set().label()
            )));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Input("--jobs must be at least 1".into()));
        }
        self.tolerances()?;
        Ok(())
    }

    pub fn tolerances(&self) -> CliResult<Tolerances> {
        let mut tol = Tolerances::default();
        for (k, v) in &self.tolerances {
            tol.set(k, *v).map_err(CliError::Input)?;
        }
        Ok(tol)
    }

    pub fn core_config(&self) -> CliResult<Config> {
        Ok(Config::with_tolerances(self.tolerances()?))
    }

    pub fn thread_pool(&self) -> CliResult<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.jobs {
            b = b.num_threads(j);
        }
        b.build().map_err(|e| CliError::Input(format!("thread pool: {e}")))
    }
}

/// `a:step:b` or a comma list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        let (a, step, b) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || b < a {
            return Err(format!("bad range `{s}`"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        // round to the step's decimal grid so 0.05·k prints as 0.35, not 0.35000000000000003
        return Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

/// `a..b` (half-open) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
        if b <= a {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

/// `key=value` tolerance override.
pub fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_seeds() {
        let g = parse_grid("0:0.05:1").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[7], 0.35);
        assert_eq!(parse_grid("0.5, 1").unwrap(), vec![0.5, 1.0]);
        assert!(parse_grid("1:0:2").is_err());
        assert_eq!(parse_seeds("3..6").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_seeds("1,9").unwrap(), vec![1, 9]);
        assert_eq!(parse_tol("psd=1e-9").unwrap(), ("psd".into(), 1e-9));
    }

    #[test]
    fn overlay_prefers_later_values() {
        let file = RunConfig {
            dimension: Some(3),
            jobs: Some(2),
            tolerances: [("psd".to_string(), 1e-9)].into(),
            ..Default::default()
        };
        let flags = RunConfig {
            dimension: Some(2),
            tolerances: [("tp".to_string(), 1e-6)].into(),
            ..Default::default()
        };
        let r = file.overlay(flags);
        assert_eq!(r.dimension(), 2);
        assert_eq!(r.jobs, Some(2));
        assert_eq!(r.tolerances.len(), 2);
    }
}
