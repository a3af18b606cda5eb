use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("singular operator: {0}")]
    Singular(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("degenerate eigenvalue: {0}")]
    Degenerate(String),
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
