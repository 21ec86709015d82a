use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("did not converge after {iterations} iterations: {detail}")]
    NotConverged { iterations: usize, detail: String },

    #[error("invalid state: {0}")]
    State(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn dimension(expected: usize, got: usize) -> Self {
        Error::Argument(format!("dimension mismatch: expected {expected}, got {got}"))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
