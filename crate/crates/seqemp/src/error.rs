//! Error types shared across the crate.

/// Errors produced by generators, process evaluation, and the verifiers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration or argument value violates a precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// An evaluation point lies outside the mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An index is out of the valid range for the object it addresses.
    #[error("index error: {0}")]
    Index(String),

    /// A numerical routine failed beyond its configured tolerances.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
