use std::path::PathBuf;

/// Errors raised by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient nodes: need at least 3 to form a TX/RX triplet, got {0}")]
    InsufficientNodes(usize),

    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("invalid fading parameters: {0}")]
    InvalidFading(String),

    #[error("distance must be strictly positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("no iteration budget: max_iters must be at least 1")]
    NoIterationBudget,

    #[error("SINR undefined: zero noise with zero received signal")]
    UndefinedSinr,

    #[error("infinite completion time: {0} rate is zero")]
    InfiniteCompletion(&'static str),

    #[error("empty power allocation grid")]
    EmptyGrid,

    #[error("no TX/RX triplets to schedule")]
    NothingToSchedule,

    #[error("plot needs at least 2 rows, got {0}")]
    TooFewRows(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("plot rendering failed: {0}")]
    Plot(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
