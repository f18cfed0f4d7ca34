use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("time {t} is beyond the simulated range (trajectory stopped at {stopped_at})")]
    OutOfRange { t: f64, stopped_at: f64 },

    #[error("sample size {n} exceeds the configured maximum {max}")]
    Resource { n: usize, max: usize },

    #[error("Laplace inversion failed: {0}")]
    Inversion(String),

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("degenerate draw: {0}")]
    Degenerate(String),

    #[error("empty sample")]
    EmptySample,

    #[error("insufficient tail: {found} samples beyond {start}, need {needed}")]
    InsufficientTail {
        found: usize,
        needed: usize,
        start: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A shared upstream step (such as an engine batch) failed.
    #[error("upstream failure: {0}")]
    Upstream(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
