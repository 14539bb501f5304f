use thiserror::Error;

/// Errors surfaced by the library. Each variant names the violated precondition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("unstable configuration: {0}")]
    Unstable(String),

    #[error("outside validity regime: {0}")]
    OutOfValidity(String),

    #[error("quadrature tolerance not met: {0}")]
    Quadrature(String),

    #[error("pole on the integration axis: |g| = {0:e}")]
    PoleOnAxis(f64),
}

impl Error {
    /// True for errors that come from physics (instability, domain, validity),
    /// as opposed to malformed input.
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::InvalidParams(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
