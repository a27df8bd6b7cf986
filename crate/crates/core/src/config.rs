//! Shared numerical configuration.

use std::path::PathBuf;
use std::sync::Arc;

use crate::sdp::{ClarabelSolver, ConicSolver};
use crate::tol::Tolerances;

pub const DEFAULT_RESPONSE_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct Config {
    pub tol: Tolerances,
    /// Upper limit on the number of deterministic responses per assemblage.
    pub response_cap: usize,
    pub solver: Arc<dyn ConicSolver>,
    /// Directory for JSON dumps of every SDP solved, if set.
    pub dump_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            response_cap: DEFAULT_RESPONSE_CAP,
            solver: Arc::new(ClarabelSolver::default()),
            dump_dir: None,
        }
    }
}

impl Config {
    pub fn with_tolerances(tol: Tolerances) -> Self {
        Self { tol, ..Self::default() }
    }
}
