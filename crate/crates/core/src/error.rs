use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("signal has zero power, SNR is undefined")]
    UndefinedSnr,
    #[error("ingestion failed: {0}")]
    Ingest(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("degenerate statistics: {0}")]
    Degenerate(String),
    #[error("no configuration could be validated")]
    NoValidConfiguration,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
