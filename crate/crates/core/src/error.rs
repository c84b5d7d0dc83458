use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs have the wrong shape (non-square matrix, dimension mismatch, ...).
    #[error("structural error: {0}")]
    Structural(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The reduced Fredholm system `I + λM'` is singular for this `λ`.
    #[error("linear system is singular for lambda = {lambda}")]
    Singular { lambda: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
}
