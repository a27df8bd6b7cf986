use thiserror::Error;

/// Failure classes, one per exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Inconsistency(_) => 3,
        }
    }
}

impl From<ipres_core::Error> for CliError {
    fn from(e: ipres_core::Error) -> Self {
        use ipres_core::Error as E;
        match e {
            E::Solver { .. } => CliError::Solver(e.to_string()),
            E::InternalInconsistency(_) | E::InvalidCertificate(_) => CliError::Inconsistency(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
