use thiserror::Error;

use crate::geometry::TrajId;

#[derive(Debug, Error)]
pub enum CctError {
    #[error("trajectory {0} has no vertices")]
    EmptyInput(TrajId),
    #[error("trajectory {0} has fewer than two distinct consecutive vertices")]
    DegenerateTrajectory(TrajId),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate trajectory id {0}")]
    DuplicateId(TrajId),
    #[error("unknown trajectory id {0}")]
    UnknownId(TrajId),
    #[error("trajectory set is empty")]
    EmptySet,
    #[error("index is empty")]
    EmptyIndex,
    #[error("k = {k} exceeds the number of stored trajectories ({size})")]
    KTooLarge { k: usize, size: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("oracle cap exceeded: {size} trajectories > cap {cap}")]
    OracleCapExceeded { size: usize, cap: usize },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("could not find a tie-free query after {0} redraws")]
    TieExhaustion(usize),
    #[error("malformed index: {0}")]
    MalformedIndex(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CctError> = std::result::Result<T, E>;
