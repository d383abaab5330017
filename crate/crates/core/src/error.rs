use thiserror::Error;

/// Errors produced by the steinthin core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid kernel parameters: {0}")]
    InvalidKernelParams(String),

    #[error("closed-form Stein kernel requires c = 1, got c = {0}")]
    UnsupportedC(f64),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty selection")]
    EmptySelection,

    #[error("no selectable candidate: all pool rows are masked or have zero density")]
    UnselectablePool,

    #[error("singular density: target density vanishes at an evaluation point")]
    SingularDensity,

    #[error("non-finite log density at chain initial state")]
    NonFiniteInit,

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, Error>;
