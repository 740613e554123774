use thiserror::Error;

/// Errors raised by kernel construction, density evaluation, metrics and
/// the toy simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("storage mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("{what} with L = {requested} exceeds the tractability limit {limit}; {suggestion}")]
    Tractability {
        what: String,
        requested: usize,
        limit: usize,
        suggestion: String,
    },

    /// Quadrature did not converge; `estimate` is the best value reached and
    /// `discrepancy` the last difference between successive node counts.
    #[error("quadrature failed to converge: best estimate {estimate:e}, discrepancy {discrepancy:e} > tolerance {tolerance:e}")]
    Accuracy {
        estimate: f64,
        discrepancy: f64,
        tolerance: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),
}

pub type Result<T> = std::result::Result<T, Error>;
