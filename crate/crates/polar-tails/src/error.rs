//! Error type shared across the crate.

/// Errors produced by model construction, quadrature, sampling, and estimation.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A model parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument is outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive integration stopped before reaching the requested tolerance.
    #[error("quadrature did not converge: value {value:e}, error estimate {error:e}, target {target:e}")]
    QuadratureNoConvergence { value: f64, error: f64, target: f64 },

    /// Too few observations for the requested estimator.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A numeric operation produced a non-finite or meaningless result.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
