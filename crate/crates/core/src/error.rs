use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite entry in matrix")]
    NonFinite,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid effect: {0}")]
    InvalidEffect(String),
    #[error("not a channel: {0}")]
    NotAChannel(String),
    #[error("not a filter: {0}")]
    NotAFilter(String),
    #[error("invalid measurement assemblage: {0}")]
    InvalidAssemblage(String),
    #[error("filter branch has zero probability (tr = {0:e})")]
    ZeroProbabilityBranch(f64),
    #[error("solver error ({status}): {message}")]
    Solver { status: String, message: String },
    #[error("bracket error: {0}")]
    Bracket(String),
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("bound unavailable: {0}")]
    BoundUnavailable(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("unchecked premise: {0}")]
    UncheckedPremise(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

impl Error {
    pub(crate) fn solver(status: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Solver {
            status: status.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
