use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the search, training and reporting stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {shapes}")]
    Shape { op: &'static str, shapes: String },

    #[error("{op} requires a non-empty vector")]
    EmptyInput { op: &'static str },

    #[error("index {index} out of range for {op} with {len} entries")]
    Index { op: &'static str, index: usize, len: usize },

    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("non-finite objective value {value} at coordinate {coordinate}")]
    NonFinite { coordinate: usize, value: f64 },

    #[error("invalid search graph: {0}")]
    Graph(String),

    #[error("invalid trajectory: {0}")]
    Trajectory(String),

    #[error("enumeration exceeded the limit of {limit} trajectories")]
    EnumerationLimit { limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reward {0} is outside [0, 1]")]
    RewardRange(f64),

    #[error("value {value} outside range [{lo}, {hi}]")]
    ValueRange { value: i64, lo: i64, hi: i64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

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

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, shapes: &[&[usize]]) -> Self {
        let shapes = shapes
            .iter()
            .map(|s| format!("{s:?}"))
            .collect::<Vec<_>>()
            .join(" vs ");
        Error::Shape { op, shapes }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
