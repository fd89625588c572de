use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{}: no edges found", .0.display())]
    EmptyInput(PathBuf),

    #[error("node id {id} out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { id: usize, num_nodes: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported embedding format: {0}")]
    Format(String),

    #[error("embedding has {rows} rows but the label table covers {nodes} nodes")]
    ShapeMismatch { rows: usize, nodes: usize },

    #[error("evaluation: {0}")]
    Eval(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
