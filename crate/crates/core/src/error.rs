use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),
    #[error("pmf supports differ")]
    SupportMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible size profile: {0}")]
    InfeasibleProfile(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("vertex count mismatch: {found} vs {expected}")]
    VertexCountMismatch { found: usize, expected: usize },
    #[error("self-query on vertex {0}")]
    SelfQuery(usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("batch of {size} pairs exceeds round cap {cap}")]
    BatchExceedsCap { size: usize, cap: usize },
    #[error("batch query requires a round cap")]
    NoRoundCap,
    #[error("oracle mode does not fit this algorithm: {0}")]
    WrongOracleMode(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("malformed side-information file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
