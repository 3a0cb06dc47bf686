use thiserror::Error;

/// Errors raised by the numerical kernels, the model, and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not symmetric (relative defect {0:.3e})")]
    NotSymmetric(f64),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unsupported subproblem: {0}")]
    Capability(String),
    #[error("instance generation failed: {0}")]
    Generation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
