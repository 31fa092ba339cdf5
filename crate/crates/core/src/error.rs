use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("points coincide (distance {0:e})")]
    CoincidentPoints(f64),

    #[error("quadrature did not reach tolerance: estimate {estimate} with error {error:e}")]
    NotConverged { estimate: f64, error: f64 },

    #[error("series failed to converge: {0}")]
    SeriesDivergence(String),

    #[error("iteration diverged: {0}")]
    Divergence(String),

    #[error("invalid domain JSON at {path}: {message}")]
    DomainSpec { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
