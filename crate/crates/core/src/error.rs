use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node {node} belongs to no subpopulation")]
    EmptyCoverage { node: usize },

    #[error(
        "subpopulation {subpop} references node {node}, but the population has {n_nodes} nodes"
    )]
    BadNodeId {
        subpop: usize,
        node: usize,
        n_nodes: usize,
    },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("operation requires the {expected} variant, got {got}")]
    WrongVariant {
        expected: &'static str,
        got: &'static str,
    },

    #[error("{what}: {size} exceeds the cap of {cap}")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("number of nodes {0} is not a positive multiple of 25")]
    BadN(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
