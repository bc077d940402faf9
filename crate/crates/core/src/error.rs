use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("permutation of size {perm} does not match graph with {nodes} nodes")]
    SizeMismatch { perm: usize, nodes: usize },

    #[error("graph with {n} nodes exceeds the isomorphism cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("time {0} outside [0, 1]")]
    TimeOutOfRange(f64),

    #[error("step too large: self-transition probability {prob:.4} at t = {t:.4}, dt = {dt:.4}")]
    StepTooLarge { prob: f64, t: f64, dt: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no dataset graph has {0} nodes")]
    NoMatchingGraphs(usize),

    #[error("state space of {0} joint states exceeds the enumeration limit")]
    StateSpaceTooLarge(u128),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("every statistic was excluded from the ratio")]
    AllStatisticsExcluded,

    #[error("degenerate posterior: dimension {0} has no mass")]
    DegeneratePosterior(usize),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
