use thiserror::Error;

/// Errors raised by the library.
///
/// Failed fractal axioms and GLP conflicts are not errors; they are returned
/// as verdicts inside [`crate::geometry::ValidationReport`] and
/// [`crate::labeling::Conflict`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Degenerate geometric input, e.g. a reflection across the bisector of a point and itself.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A configured resource budget would be exceeded.
    #[error("resource limit exceeded: {what} needs {requested}, limit is {limit}")]
    Resource {
        what: String,
        requested: u128,
        limit: u128,
    },

    /// The input violates a structural requirement (e.g. connectivity).
    #[error("validation error: {0}")]
    Validation(String),

    /// An internal consistency check failed.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Malformed spec file or textual input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }
}
