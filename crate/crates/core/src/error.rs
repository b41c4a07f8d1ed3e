use thiserror::Error;

/// Errors produced by the model, solver and oracle routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported instance size {n} (at most {max} supported)")]
    UnsupportedSize { n: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
