//! `ipres`: joint measurability, robustness scans and filter games from the
//! command line.
//!
//! Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 internal
//! inconsistency (including failed verification suites).

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ipres_core::Channel;
use ipres_core::preservability::ProbeSet;

use commands::game::{Denominator, FilterChoice};
use commands::verify::Suite;
use config::{CommandKind, Format, RunConfig, parse_grid, parse_seeds, parse_tol};
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "ipres", version, about = "Incompatibility-preservability toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Every flag can also be set with the `IPRES_` variable shown.
#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON file with the same fields as the resolved run configuration.
    #[arg(long, global = true, env = "IPRES_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "IPRES_DIM")]
    dim: Option<usize>,
    /// `start:step:end` or a comma list, values in [0, 1].
    #[arg(long, global = true, env = "IPRES_P_GRID")]
    p_grid: Option<String>,
    /// xz, xyz or mub-d.
    #[arg(long, global = true, env = "IPRES_PROBES")]
    probes: Option<ProbeSet>,
    /// `a..b` or a comma list.
    #[arg(long, global = true, env = "IPRES_SEEDS")]
    seeds: Option<String>,
    /// Tolerance override `key=value`; repeatable.
    #[arg(long = "tol", global = true, env = "IPRES_TOL", value_delimiter = ',', value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    #[arg(long, global = true, env = "IPRES_JOBS")]
    jobs: Option<usize>,
    #[arg(long, global = true, env = "IPRES_OUTPUT")]
    output: Option<PathBuf>,
    #[arg(long, global = true, env = "IPRES_FORMAT", value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, env = "IPRES_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide joint measurability and report the depolarising visibility.
    Jm {
        #[arg(long)]
        builtin: Option<String>,
        /// Assemblage JSON: {"dim": d, "settings": [[effect, ...], ...]}.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Robustness bounds for depolarising channels over a p grid.
    DepolScan,
    /// Seeded property suites.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Channel JSON added to the suites that take arbitrary channels.
        #[arg(long)]
        channel: Option<PathBuf>,
    },
    /// Game-based lower bound on 1 + R for a channel and filter.
    Game {
        /// Channel JSON: {"dim_in", "dim_out", "kraus"} or "choi".
        #[arg(long, conflicts_with = "builtin_channel")]
        channel: Option<PathBuf>,
        /// identity or depol:<p>, at --dim.
        #[arg(long, default_value = "identity")]
        builtin_channel: String,
        /// Filter JSON: {"dim", "kraus"}.
        #[arg(long, conflicts_with = "builtin_filter")]
        filter: Option<PathBuf>,
        /// phi-plus or witness.
        #[arg(long, default_value = "phi-plus")]
        builtin_filter: String,
        #[arg(long, value_enum, default_value_t = Denominator::Probe)]
        denominator: Denominator,
    },
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Jm { .. } => CommandKind::Jm,
            Command::DepolScan => CommandKind::DepolScan,
            Command::Verify { .. } => CommandKind::Verify,
            Command::Game { .. } => CommandKind::Game,
        }
    }
}

fn resolve(g: &GlobalArgs, kind: CommandKind) -> CliResult<RunConfig> {
    let base = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        command: Some(kind),
        dimension: g.dim,
        p_grid: g.p_grid.as_deref().map(parse_grid).transpose().map_err(CliError::Input)?,
        probe_set: g.probes,
        seeds: g.seeds.as_deref().map(parse_seeds).transpose().map_err(CliError::Input)?,
        tolerances: g.tol.iter().cloned().collect(),
        output: g.output.clone(),
        format: g.format,
        jobs: g.jobs,
        cache_dir: g.cache_dir.clone(),
    };
    let cfg = base.overlay(flags);
    cfg.validate()?;
    Ok(cfg)
}

fn load_channel(path: &std::path::Path) -> CliResult<Channel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let cfg = resolve(&cli.global, cli.command.kind())?;
    match cli.command {
        Command::Jm { builtin, file } => commands::jm::run(builtin.as_deref(), file.as_ref(), &cfg),
        Command::DepolScan => commands::scan::run(&cfg),
        Command::Verify { suite, trials, channel } => {
            let ch = channel.as_deref().map(load_channel).transpose()?;
            commands::verify::run(suite, trials, ch.as_ref(), &cfg)
        }
        Command::Game {
            channel,
            builtin_channel,
            filter,
            builtin_filter,
            denominator,
        } => {
            let n = match channel {
                Some(p) => load_channel(&p)?,
                None => commands::game::builtin_channel(&builtin_channel, cfg.dimension())?,
            };
            let k = match (filter, builtin_filter.as_str()) {
                (Some(p), _) => FilterChoice::Given(commands::game::load_filter(&p, &cfg)?),
                (None, "phi-plus") => FilterChoice::PhiPlus,
                (None, "witness") => FilterChoice::Witness,
                (None, other) => return Err(CliError::Input(format!("unknown filter `{other}`"))),
            };
            commands::game::run(&n, k, denominator, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
