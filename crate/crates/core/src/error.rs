use thiserror::Error;

/// Errors raised by the numerical and sampling routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("boundary data not normalized: a + c + sum(b) = {0}")]
    Normalization(f64),
    #[error("quadrature tolerance not met: estimated error {estimate:e} exceeds {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },
    #[error("matrix is singular or ill-conditioned (condition number {0:e})")]
    Singular(f64),
    #[error("diagnostics failed: {0}")]
    Diagnostics(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
