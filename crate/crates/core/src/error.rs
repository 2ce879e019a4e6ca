//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// The request is valid but too large for exact enumeration.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A Monte Carlo trial produced a non-finite functional value.
    #[error("trial {trial} produced a non-finite value")]
    NonFiniteTrial { trial: u64 },

    /// An Euler step produced a non-finite state component.
    #[error("non-finite state component at step {step}")]
    NonFiniteState { step: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }
}
