use thiserror::Error;

pub type Result<T> = std::result::Result<T, HwError>;

#[derive(Debug, Error)]
pub enum HwError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("frame {frame} carries no reference symbols")]
    DegenerateFrame { frame: usize },

    #[error("insufficient data: {have} accepted symbols, need at least {need}")]
    InsufficientData { have: usize, need: usize },

    #[error("record mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Core(#[from] qnic_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
