use ipres_core::preservability::{
    depolarising_report, eb_robustness_ub, restricted_robustness_lb, sf_lower_bounds, ProbeFamily,
};
use ipres_core::{Channel, Config};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Cache, Sink};

/// Column order of the scan CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub p: f64,
    /// `p` at or below `(H_d − 1)/(d − 1)`.
    pub threshold_flag: bool,
    #[serde(rename = "F_plus")]
    pub f_plus: f64,
    pub lb_probe: f64,
    pub lb_sf: Option<f64>,
    /// Certified only at `d = 2`; empty otherwise.
    pub ub_eb: Option<f64>,
    pub sandwich_lo: Option<f64>,
    pub sandwich_hi: Option<f64>,
}

const SLACK: f64 = 1e-6;

fn row(p: f64, d: usize, probes: &ProbeFamily, cfg: &Config) -> CliResult<ScanRow> {
    let n = Channel::depolarising(p, d)?;
    let rep = depolarising_report(p, d)?;
    let lb_probe = restricted_robustness_lb(&n, probes, cfg)?;
    let lb_sf = sf_lower_bounds(&n).ok().map(|s| s.lower);
    let ub_eb = if d == 2 { Some(eb_robustness_ub(&n, cfg)?) } else { None };
    let r = ScanRow {
        p,
        threshold_flag: rep.below_threshold,
        f_plus: n.singlet_fraction()?,
        lb_probe,
        lb_sf,
        ub_eb,
        sandwich_lo: rep.sandwich.map(|s| s.0),
        sandwich_hi: rep.sandwich.map(|s| s.1),
    };
    check_row(&r, cfg.tol.gap)?;
    Ok(r)
}

/// Orderings every row must satisfy.
pub fn check_row(r: &ScanRow, gap: f64) -> CliResult<()> {
    let bad = |what: String| Err(CliError::Inconsistency(format!("p = {}: {what}", r.p)));
    let lowers = [Some(r.lb_probe), r.lb_sf];
    for lb in lowers.into_iter().flatten() {
        if let Some(ub) = r.ub_eb
            && lb > ub + gap {
                return bad(format!("lower bound {lb} above upper bound {ub}"));
            }
        if let Some(hi) = r.sandwich_hi
            && lb > hi + SLACK {
                return bad(format!("lower bound {lb} above {hi}"));
            }
        if r.threshold_flag && lb > SLACK {
            return bad(format!("lower bound {lb} for a free channel"));
        }
    }
    if let (Some(ub), Some(lo)) = (r.ub_eb, r.sandwich_lo)
        && ub < lo - SLACK {
            return bad(format!("upper bound {ub} below {lo}"));
        }
    Ok(())
}

#[derive(Serialize)]
struct CacheKey<'a> {
    version: &'a str,
    dim: usize,
    p_grid: &'a [f64],
    probes: &'a str,
    tolerances: &'a std::collections::BTreeMap<String, f64>,
}

pub fn compute(cfg: &RunConfig) -> CliResult<Vec<ScanRow>> {
    let d = cfg.dimension();
    let grid = cfg.p_grid();
    let core = cfg.core_config()?;
    let probes = ProbeFamily::standard(cfg.probe_set(), d, &core)?;
    let cache = Cache::new(cfg.cache_dir.as_deref());
    let key = CacheKey {
        version: env!("CARGO_PKG_VERSION"),
        dim: d,
        p_grid: &grid,
        probes: &probes.label,
        tolerances: &cfg.tolerances,
    };
    if let Some(rows) = cache.get::<_, Vec<ScanRow>>("depol-scan", &key)? {
        return Ok(rows);
    }
    let pool = cfg.thread_pool()?;
    let rows = pool.install(|| {
        grid.par_iter()
            .map(|&p| row(p, d, &probes, &core))
            .collect::<CliResult<Vec<_>>>()
    })?;
    cache.put("depol-scan", &key, &rows)?;
    Ok(rows)
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let rows = compute(cfg)?;
    let sink = Sink::new(cfg);
    sink.emit(cfg.format.unwrap_or(Format::Csv), &rows)?;
    if sink.is_file() {
        println!("{} rows written", rows.len());
    }
    Ok(())
}
