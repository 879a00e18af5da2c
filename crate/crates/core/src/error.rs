use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Gamma function has a pole at {0}")]
    GammaPole(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("tolerance error: {0}")]
    Tolerance(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("length error: {0}")]
    Length(String),

    #[error("lowpass condition violated: {0}")]
    ConditionViolated(String),

    #[error("insufficient range: {0}")]
    InsufficientRange(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
