use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidSpec(String),

    #[error("invalid activation mask: {0}")]
    InvalidMask(String),

    #[error("invalid surface state: {0}")]
    InvalidState(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("search space has {size} configurations, above the enumeration limit of {limit}")]
    SpaceTooLarge { size: f64, limit: f64 },

    #[error("phase spread is undefined for an all-zero phasor set")]
    UndefinedSpread,

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error(transparent)]
    Config(#[from] crate::experiment::ConfigError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
