use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time-change spec: {0}")]
    InvalidSpec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid alignment error: {0}")]
    Alignment(String),

    #[error("strategy is not causal: {0}")]
    NotCausal(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("inadmissible strategy: {0}")]
    Inadmissible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
