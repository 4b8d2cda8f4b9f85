use thiserror::Error;

/// Errors produced while assembling, validating, or simulating a system.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("P0 is not skew-symmetric (max |P0 + P0^T| = {defect:e})")]
    NotSkew { defect: f64 },
    #[error("matrix is not symmetric (max |A - A^T| = {defect:e}) at {location}")]
    NotSymmetric { location: String, defect: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("boundary splitting does not partition the face-node set: {0}")]
    SplitMismatch(String),
    #[error("vector has infinite dual norm (not in D-)")]
    InfiniteNorm,
    #[error("matrix is numerically singular (sigma_min / sigma_max = {ratio:e})")]
    Singular { ratio: f64 },
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("state violates the Gamma_0 clamp (residual {residual:e})")]
    ClampViolated { residual: f64 },
    #[error("operator is not dissipative (max symmetric eigenvalue {max_eig:e})")]
    NotDissipative { max_eig: f64 },
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("saddle-point system is singular: {0}")]
    SaddleSingular(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
