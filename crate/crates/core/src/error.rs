use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("topology is disconnected: nodes {unreachable:?} cannot be reached from node 0")]
    Disconnected { unreachable: Vec<usize> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no connected topology after {0} attempts")]
    RetryBudgetExhausted(usize),

    #[error("destination {dst} unreachable from source {src}")]
    Unreachable { src: usize, dst: usize },

    #[error("subset enumeration refused for {0} links (limit 10)")]
    TooManyLinks(usize),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
