use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid generalized equation: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("structural violation: {0}")]
    Structure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
