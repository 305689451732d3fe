use thiserror::Error;

/// Errors raised by the numerical routines and the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not invertible (smallest singular value {smallest_singular_value:.3e})")]
    NotInvertible { smallest_singular_value: f64 },

    #[error("matrices do not commute: ||AB - BA|| = {commutator:.3e} exceeds {bound:.3e}")]
    NotCommuting { commutator: f64, bound: f64 },

    #[error("matrix is defective or numerically non-diagonalizable (eigenvector condition {condition:.3e})")]
    Defective { condition: f64 },

    #[error("series did not converge: {0}")]
    NoConvergence(String),

    #[error("singular pivot in banded LU at column {column}; perturb the shift")]
    SingularPivot { column: usize },

    #[error("solution blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("phase condition is singular (symmetry-degenerate profile)")]
    SingularPhaseCondition,

    #[error("{0}")]
    Numerical(String),

    #[error("missing artifact {path}: run `{command}` first")]
    MissingArtifact { path: String, command: &'static str },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::Config(_) | Error::MissingArtifact { .. } | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
