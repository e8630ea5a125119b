use thiserror::Error;

/// Errors raised by the numerical routines and the front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the routine is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set or configuration violates one of its invariants.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A resolvent denominator vanished exactly.
    #[error("singular denominator at omega = {omega} eV")]
    Singular { omega: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
