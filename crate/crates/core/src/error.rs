use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CactusError>;

#[derive(Debug, Error)]
pub enum CactusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config key `{key}`: {reason}")]
    ConfigSchema { key: String, reason: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("target column `{0}` not found")]
    MissingTarget(String),

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("table is empty after cleaning")]
    EmptyTable,

    #[error("stratification attribute `{attribute}` {reason}")]
    Stratification { attribute: String, reason: String },

    #[error("{0}")]
    Labels(String),

    #[error("attribute `{0}` has no observed values")]
    AllMissing(String),

    #[error("attribute `{0}` has a single distinct value and cannot be thresholded")]
    SingleValue(String),

    #[error("value `{value}` of attribute `{attribute}` is not in the schema")]
    UnseenValue { attribute: String, value: String },

    #[error("class {0} has no records")]
    EmptyClass(usize),

    #[error("graph for class {0} has no node with positive corrected significance")]
    DegenerateGraph(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graphml: {0}")]
    GraphMl(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CactusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CactusError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CactusError::ConfigSchema {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
