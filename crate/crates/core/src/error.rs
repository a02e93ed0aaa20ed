use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("{what}: requested {requested}, limit {limit}")]
    Capability {
        what: &'static str,
        requested: usize,
        limit: usize,
    },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("accuracy: {0}")]
    Accuracy(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("diagnostic: {0}")]
    Diagnostic(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
