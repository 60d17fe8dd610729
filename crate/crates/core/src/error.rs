use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what}: size {size} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("inconsistent constraints: row {row} contradicts the independent rows")]
    InconsistentConstraints { row: usize },

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("point is not optimal: x'Qx = {value} but nu(Q) = {nu}")]
    NotOptimal { value: f64, nu: f64 },

    #[error("matrix is not copositive (nu = {nu})")]
    NotCopositive { nu: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
