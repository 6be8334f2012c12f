use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsingError {
    #[error("exact inference limited to m <= {cutoff}, got m = {m}")]
    DimensionTooLarge { m: usize, cutoff: usize },
    #[error("joint query over {size} legs unsupported by belief propagation (cap {cap})")]
    UnsupportedQuery { size: usize, cap: usize },
    #[error("empty leg set")]
    EmptySubset,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("target moments not strictly interior: {0}")]
    InvalidMoments(String),
    #[error("moment fit did not converge after {iterations} iterations (gap {gap:.3e})")]
    NonConvergence { iterations: usize, gap: f64 },
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("correlation matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid world configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("event at ts {ts} precedes previous ts {prev}")]
    OutOfOrder { ts: i64, prev: i64 },
    #[error("unknown market key {0:?}")]
    UnknownMarket(String),
    #[error("no candles for market {0:?}")]
    EmptyMarket(String),
    #[error("no price for subsets {0:?}")]
    MissingPrice(Vec<Vec<String>>),
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("empty sample")]
    EmptySample,
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
