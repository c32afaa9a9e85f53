use thiserror::Error;

/// Errors surfaced by instance construction, oracles and policy execution.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BsecError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("policy contract violation: {0}")]
    ContractViolation(String),
    #[error("undefined posterior: {0}")]
    UndefinedPosterior(String),
    #[error("posterior budget exhausted: {0}")]
    PosteriorBudget(String),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, BsecError>;

impl From<std::io::Error> for BsecError {
    fn from(e: std::io::Error) -> Self {
        BsecError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for BsecError {
    fn from(e: serde_json::Error) -> Self {
        BsecError::Config(e.to_string())
    }
}
