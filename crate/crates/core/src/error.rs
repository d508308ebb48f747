use thiserror::Error;

/// Errors raised across the decompounding pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error(
        "solution set for m = {m}, z = {z} has {count} elements (~{bytes} bytes), \
         exceeding the memory budget of {budget} bytes"
    )]
    ResourceLimit {
        m: usize,
        z: usize,
        count: u128,
        bytes: u128,
        budget: usize,
    },

    #[error("solution set has a single element; no neighbours")]
    NoNeighbors,

    #[error("vector {0:?} is not a member of the solution set")]
    NotFound(Vec<u32>),

    #[error("invalid chain state: {0}")]
    InvalidState(String),

    #[error("plug-in estimator not applicable: {0}")]
    NotApplicable(String),

    #[error("plug-in estimator breaks down: {0}")]
    Breakdown(String),

    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
