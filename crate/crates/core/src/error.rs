use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (||H - H^dagger|| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Fock truncation unhealthy: top-level population {population:e} exceeds {threshold:e}")]
    Truncation { population: f64, threshold: f64 },

    #[error("invalid probability vector: {0}")]
    Probabilities(String),

    #[error("singular detection confusion matrix for qubit {qubit}")]
    SingularConfusion { qubit: usize },

    #[error("measurement setting {0} missing from the record set")]
    MissingSetting(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bootstrap invalid: {failed} of {total} resamples failed")]
    Bootstrap { failed: usize, total: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
