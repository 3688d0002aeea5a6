use thiserror::Error;

/// Errors raised by the operator, channel and bound routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("trace is {0} instead of 1")]
    BadTrace(f64),

    #[error("{what} = {value} outside its domain {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("p = {0} lies outside the degradable region p <= 1/2")]
    OutsideDegradableRegion(f64),

    #[error("degrading map parameters inadmissible: {0}")]
    Inadmissible(String),

    #[error("map is not completely positive (min Choi eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("d = {d} exceeds the memory cap {cap}")]
    MemoryCap { d: usize, cap: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
