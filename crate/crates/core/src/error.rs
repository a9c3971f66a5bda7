//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("precision too low: need at least {needed} bits, got {got}")]
    PrecisionInsufficient { needed: u32, got: u32 },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("invalid digit vector: {0}")]
    InvalidDigits(String),

    #[error("singular factor: argument of factor {n} is an integer")]
    SingularFactor { n: u64 },

    #[error("compute budget exceeded: {0}")]
    Budget(String),

    #[error("spectral data inconsistent: {0}")]
    Inconsistent(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("continued fraction is not in canonical form: {0}")]
    NonCanonical(String),

    #[error("tail tolerance {tolerance} unreachable within truncation cap {cap}")]
    TailToleranceUnreachable { tolerance: f64, cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
