use std::path::PathBuf;

/// Errors raised by the monitoring toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("value outside domain: {0}")]
    Domain(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("support condition violated at state {state}, action {action}")]
    Support { state: usize, action: usize },
    #[error("action {action} has zero probability under both policies at state {state}")]
    UndefinedAction { state: usize, action: usize },
    #[error("chain is not ergodic: {0}")]
    Ergodicity(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
