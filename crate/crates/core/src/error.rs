use thiserror::Error;

/// Errors raised across the simulation and probe pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DsbError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error(
        "covariance factorization failed after {attempts} jitter escalations \
         (final jitter {final_jitter:e}, min diagonal {min_diag:e}, max diagonal {max_diag:e})"
    )]
    Factorization {
        attempts: usize,
        final_jitter: f64,
        min_diag: f64,
        max_diag: f64,
    },

    #[error("grid coverage insufficient: captured mass {mass:.9}")]
    Coverage { mass: f64 },

    #[error("no node within radius {radius} of the query point")]
    NoNodeInRadius { radius: f64 },

    #[error("support mismatch: reference density is zero at node {node} where the target density is {value:e}")]
    Support { node: usize, value: f64 },

    #[error("probe error: {0}")]
    Probe(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = DsbError> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(DsbError::Input(msg.into()))
}
