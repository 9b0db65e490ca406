use thiserror::Error;

/// Errors produced by the geometry, metric and bound engines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("derivative requested on a singular locus ({0})")]
    SingularLocus(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point not interior: {0}")]
    NotInterior(String),

    #[error("projection did not converge (best residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("point outside the tubular neighborhood: {0}")]
    OutsideTubular(String),

    #[error("degenerate defining function: {0}")]
    Degenerate(String),

    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain validation failed: {0}")]
    Validation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
