use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty cycle")]
    EmptyCycle,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("episode finished")]
    EpisodeFinished,
    #[error("APFD undefined without failures")]
    ApfdUndefined,
    #[error("degenerate group: {0}")]
    DegenerateGroup(String),
    #[error("mismatched rankings: {0}")]
    MismatchedRankings(String),
    #[error("numerical integration did not converge: {0}")]
    NonConvergence(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
