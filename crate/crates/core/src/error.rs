use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The data do not support the requested computation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Symmetric factorization broke down.
    #[error("matrix is numerically singular: pivot {pivot:e} at index {index} (tolerance {tolerance:e})")]
    Singular {
        index: usize,
        pivot: f64,
        tolerance: f64,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Prefix the message with the offending dimension (0-based).
    pub(crate) fn in_dimension(self, j: usize) -> Self {
        match self {
            Error::Parameter(m) => Error::Parameter(format!("dimension {j}: {m}")),
            Error::Domain(m) => Error::Domain(format!("dimension {j}: {m}")),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
