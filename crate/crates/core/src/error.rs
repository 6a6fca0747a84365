use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bounding box: {0}")]
    InvalidBox(String),
    #[error("speed buffer holds {have} boxes, at least {need} required")]
    InsufficientHistory { have: usize, need: usize },
    #[error("speed buffer frames must increase: got {got} after {last}")]
    NonMonotonicBuffer { last: u32, got: u32 },
    #[error("innovation covariance is not positive definite")]
    SingularInnovation,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(&'static str),
    #[error("frame index {got} does not follow {last}")]
    NonMonotonicFrame { last: u32, got: u32 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown scenario `{0}` (expected cross, follow, linger or crowd)")]
    UnknownScenario(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
