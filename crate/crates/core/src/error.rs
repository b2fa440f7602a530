use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate element {elem}: volume {volume:e}")]
    DegenerateElement { elem: usize, volume: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
