use std::path::PathBuf;

use thiserror::Error;

/// Coarse error classes. The CLI maps each class onto its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Io,
    Validation,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("duplicate symbol header {0:?}")]
    DuplicateSymbol(String),

    #[error("empty symbol header in column {0}")]
    EmptySymbol(usize),

    #[error("unparsable date {value:?} on line {line} (expected YYYY-MM)")]
    BadDate { value: String, line: usize },

    #[error("non-monotone dates: {previous} is followed by {next}")]
    NonMonotoneDates { previous: String, next: String },

    #[error("unparsable price {value:?} for {symbol} at {date}")]
    BadValue {
        value: String,
        symbol: String,
        date: String,
    },

    #[error("row for {date} has {found} cells, header has {expected}")]
    RaggedRow {
        date: String,
        found: usize,
        expected: usize,
    },

    #[error("need at least 2 symbols, found {0}")]
    TooFewSymbols(usize),

    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("missing value for {symbol} at {date}")]
    MissingValue { symbol: String, date: String },

    #[error("lag must be at least 1")]
    ZeroLag,

    #[error("zero-variance series {0:?}: correlation undefined")]
    ZeroVariance(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("invalid distance matrix: {0}")]
    InvalidDistance(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("node index {index} out of range for {n} nodes")]
    NodeIndex { index: usize, n: usize },

    #[error("cluster count {k} out of range 1..={n}")]
    ClusterCount { k: usize, n: usize },

    #[error("replica count must be at least 1")]
    NoReplicas,

    #[error("all {0} bootstrap replicas were dropped (zero-variance resamples)")]
    AllReplicasDropped(usize),

    #[error("infeasible block model: {0}")]
    InfeasibleBlockModel(String),

    #[error("brute-force oracle limited to n <= {max}, got {n}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("newick parse error at byte {pos}: {msg}")]
    Newick { pos: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::Csv(e) if e.is_io_error() => ErrorClass::Io,
            Error::ZeroVariance(_) | Error::AllReplicasDropped(_) | Error::NonFinite { .. } => {
                ErrorClass::Numerical
            }
            Error::Config(_) | Error::NoReplicas | Error::ZeroLag => ErrorClass::Usage,
            _ => ErrorClass::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
