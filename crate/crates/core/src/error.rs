use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("label column {0:?} not found")]
    MissingLabelColumn(String),

    #[error("non-numeric feature cell {value:?} at row {row}, column {column}")]
    NonNumericFeature {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("non-finite feature at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dataset has a single class")]
    SingleClass,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("degenerate train fraction {fraction} for {n} examples")]
    DegenerateFraction { fraction: f64, n: usize },

    #[error("cannot build {k} folds from {n} examples")]
    InvalidFolds { k: usize, n: usize },

    #[error("sample weights are all zero")]
    AllZeroWeights,

    #[error("invalid sample weights: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("regressor for class {class} failed: {source}")]
    Regressor {
        class: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("learner failed at gamma={gamma}, beta={beta}: {source}")]
    GridCell {
        gamma: f64,
        beta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown synthetic generator {0:?}")]
    UnknownGenerator(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
