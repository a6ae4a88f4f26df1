use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Runtime,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },

    #[error("{}: line {line}: expected {expected} fields, found {found}", path.display())]
    RaggedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("{}: line {line}: column `{column}`: cannot parse `{value}` as a number", path.display())]
    BadNumber {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("feature count mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("feature mask selects no features")]
    EmptyMask,

    #[error("class `{0}` has fewer than 2 instances and cannot be split")]
    SingletonClass(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exact enumeration supports at most {max} non-zero differences, got {n}; use a normal approximation instead (not provided)")]
    TooManyPairs { n: usize, max: usize },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("{phase} phase failed: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_phase(self, phase: &'static str) -> Self {
        Error::Phase {
            phase,
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Parse { .. } => ErrorKind::Config,
            Error::Io { .. }
            | Error::Csv { .. }
            | Error::RaggedRow { .. }
            | Error::BadNumber { .. }
            | Error::MissingColumn(_)
            | Error::EmptyDataset(_)
            | Error::SingletonClass(_) => ErrorKind::Data,
            Error::Phase { source, .. } => source.kind(),
            _ => ErrorKind::Runtime,
        }
    }
}
