//! Errors shared by every module of the crate.

use thiserror::Error;

/// Errors produced while constructing or evaluating privacy objects.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// A requested domain enumeration exceeds the configured cap.
    #[error("domain enumeration would produce {required} datasets, above the cap of {cap}")]
    EnumerationTooLarge { required: u128, cap: u128 },

    /// A premetric was applied to a domain mode it does not support.
    #[error("premetric mode mismatch: {0}")]
    ModeMismatch(String),

    /// Two distributions do not share an output space.
    #[error("output space mismatch: left has {left} outputs, right has {right}")]
    OutputSpaceMismatch { left: usize, right: usize },

    /// Two objects that must share a dataset domain do not.
    #[error("dataset domain mismatch: {0}")]
    DomainMismatch(String),

    /// A constructor parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A dataset id does not exist in the domain.
    #[error("unknown dataset id {id} (domain has {size} datasets)")]
    UnknownDataset { id: usize, size: usize },

    /// A kernel row is not a probability distribution.
    #[error("row for dataset {dataset} is not a distribution: {reason}")]
    NonStochasticRow { dataset: usize, reason: String },

    /// A document does not match its schema.
    #[error("schema violation{}: {message}", path_suffix(.path))]
    Schema {
        path: Option<String>,
        message: String,
    },

    /// A specification failed structural validation.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// Budgets of different flavors may not be composed.
    #[error("composition refused: {0}")]
    CompositionRefused(String),

    /// A value string could not be parsed.
    #[error("cannot parse value {input:?}: {message}")]
    ValueParse { input: String, message: String },

    /// Filesystem failure, annotated with the offending path.
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// JSON syntax failure, annotated with the offending path and location.
    #[error("cannot parse {path} (line {line}, column {column}): {message}")]
    Json {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

fn path_suffix(path: &Option<String>) -> String {
    match path {
        Some(p) => format!(" in {p}"),
        None => String::new(),
    }
}

impl Error {
    /// Wrap an io error with the path it concerns.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wrap a serde_json error with the path it concerns.
    pub fn json(path: impl Into<String>, source: &serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            line: source.line(),
            column: source.column(),
            message: source.to_string(),
        }
    }

    pub fn schema(path: Option<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
