use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// The instance document is not valid JSON or does not match the schema.
    #[error("malformed instance document: {0}")]
    Malformed(String),

    /// A field violated an instance invariant. `path` names the offending field.
    #[error("invalid field `{path}`: {message}")]
    InvalidField { path: String, message: String },

    #[error("schedule has {got} assignments but the instance has {expected} nurses")]
    ScheduleLength { expected: usize, got: usize },

    #[error("nurse {nurse} has no pattern {pattern} (it has {available})")]
    InvalidPattern {
        nurse: usize,
        pattern: usize,
        available: usize,
    },

    #[error("rule string has length {got}, expected {expected}")]
    RuleStringLength { expected: usize, got: usize },

    #[error("rule id {0} is outside the catalog")]
    RuleOutOfRange(usize),

    #[error("enumeration needs {combinations} combinations, budget is {budget}")]
    BudgetExceeded { combinations: u128, budget: u64 },

    #[error("empty elite with zero smoothing")]
    EmptyElite,

    #[error("roulette weights must be non-negative with a positive sum")]
    InvalidWeights,

    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidField {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
