use thiserror::Error;

/// Errors surfaced by the pricing engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("domain: {0}")]
    Domain(String),

    /// A covariance matrix was not positive semidefinite.
    #[error("covariance not positive semidefinite: {0}")]
    NotPsd(String),

    /// A quadrature integrand produced a non-finite value; the payload
    /// carries the offending node so the caller can see where it blew up.
    #[error("integrand returned non-finite value {value} at node ({x}, {y})")]
    NonFiniteIntegrand { x: f64, y: f64, value: f64 },

    /// Malformed curve CSV or table row-spec file.
    #[error("parse: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
