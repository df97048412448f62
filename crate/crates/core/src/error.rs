use thiserror::Error;

use crate::network::ValidationReport;

/// Errors raised by the model, certificate and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("network fails validation: {0}")]
    InvalidNetwork(ValidationReport),

    #[error("(I - R^T) is singular or ill-conditioned (spectral radius estimate {spectral_radius:.12})")]
    SingularLeontief { spectral_radius: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid flow field: {0}")]
    InvalidFlowField(String),

    #[error("network is not local: {0}")]
    NotLocal(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("integration failed at step {step} (t = {time}): {reason}")]
    IntegrationFailure {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("outflow resolution did not converge after {iterations} iterations (residual {residual:e})")]
    OutflowResolution { iterations: usize, residual: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
