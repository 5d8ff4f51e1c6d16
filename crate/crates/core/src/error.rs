//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by loading, modeling, and auditing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("missing column '{0}' in csv header")]
    MissingColumn(String),

    #[error("row {row}, column '{column}': unparsable cell '{cell}'")]
    BadCell {
        row: usize,
        column: String,
        cell: String,
    },

    #[error("row {row}, column '{column}': missing value")]
    MissingValue { row: usize, column: String },

    #[error("no rows in dataset")]
    NoRows,

    #[error("data error: {0}")]
    Data(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("graph has a cycle involving node '{0}'")]
    CycleDetected(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("design matrix for '{target}' is rank deficient")]
    RankDeficient { target: String },

    #[error("node '{node}' needs numeric values for structural-equation fitting")]
    NonNumericNode { node: String },

    #[error("node '{0}' has no value in the given profile")]
    MissingNodeValue(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("intervention target '{0}' is not a root node")]
    InterventionNotRoot(String),

    #[error("distance error: {0}")]
    Distance(String),

    #[error("empty candidate pool{}", .complainant.map(|id| format!(" for complainant {id}")).unwrap_or_default())]
    EmptyCandidatePool { complainant: Option<usize> },

    #[error("audit error: {0}")]
    Audit(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
