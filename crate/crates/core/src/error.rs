use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric positive definite ({0})")]
    NotSpd(String),

    #[error("matrix is singular ({0})")]
    Singular(String),

    #[error("invalid mesh size {0}: need at least one subdivision")]
    InvalidSize(usize),

    #[error("finite element spaces live on different meshes")]
    MeshMismatch,

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("operation requires Assumption ĉ₀ < min(c₀, c̃₀): {0}")]
    AssumptionViolated(String),

    #[error("degenerate denominator in {0}")]
    DegenerateDenominator(&'static str),

    #[error("negative quadratic form vᵀMv = {0:e}")]
    NegativeQuadraticForm(f64),

    #[error("reference norm of {0} is zero")]
    ZeroReference(&'static str),

    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
