use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {pivot:e} at index {index} below threshold {threshold:e}")]
    NotPositiveDefinite {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {deviation:e} (allowed {allowed:e})")]
    NotSymmetric { deviation: f64, allowed: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible distortion targets: {0}")]
    Infeasible(String),

    #[error("degenerate shrinkage: tau = {tau} must be positive")]
    DegenerateShrinkage { tau: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed matrix file: {0}")]
    MatrixFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
