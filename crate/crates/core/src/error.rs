use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("lambda = {lambda} does not divide n = {n}")]
    GroupsDoNotDivide { n: usize, lambda: usize },

    #[error("series of length {len} is too short for {windows} windows (need at least {needed})")]
    WindowsTooMany { len: usize, windows: usize, needed: usize },

    #[error("subset size m = {m} is outside 1..={n}")]
    SubsetSize { m: usize, n: usize },

    #[error("training needs at least 2 distinct classes, got {0}")]
    SingleClass(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error(
        "solver did not converge for class {class:?} after {iterations} iterations \
         (KKT violation {violation:.3e}, duality gap {gap:.3e})"
    )]
    NotConverged { class: String, iterations: usize, violation: f64, gap: f64 },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Manifest { path: PathBuf, line: usize, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("repetition {rep}: {source}")]
    InRepetition { rep: usize, source: Box<Error> },

    #[error("item {id:?}: {source}")]
    InItem { id: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }

    /// Process exit code used by the command line tool: 2 for data errors, 3 for
    /// solver convergence failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotConverged { .. } => 3,
            Error::InRepetition { source, .. } | Error::InItem { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
