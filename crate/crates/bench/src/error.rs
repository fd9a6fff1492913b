use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Rejected before any run starts.
    #[error("invalid experiment: {0}")]
    Invalid(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] historypca::Error),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BenchError {
    /// Errors caused by user input rather than by a run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            BenchError::Invalid(_)
                | BenchError::Config(_)
                | BenchError::Core(historypca::Error::InvalidArgument(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
