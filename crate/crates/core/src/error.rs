use std::path::PathBuf;

/// Errors raised anywhere in the reservoir pipeline.
///
/// Variants are grouped by the stage that raises them; [`Error::kind`] maps
/// each one to a coarse category used for process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("expected {expected} values, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("input value {value} at index {index} outside [{lo}, {hi}]")]
    OutOfRange {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training diverged: {0}")]
    NonFinite(String),
    #[error("normal equations are singular (rank-deficient features with l2 = 0)")]
    Singular,

    #[error("recurrence diverged at step {step} (|y| = {value})")]
    Diverged { step: usize, value: f64 },
    #[error("target has zero variance")]
    ZeroVariance,
    #[error("test seed must differ from training seed ({0})")]
    IndependenceViolation(u64),

    #[error("bad IDX magic in {path}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },
    #[error("IDX dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("truncated IDX file {path}: expected {expected} bytes, found {found}")]
    TruncatedFile {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("config error: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse failure category of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Data => "data",
            ErrorKind::Numerical => "numerical",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        }
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::InvalidParams(_) | Error::IndependenceViolation(_) => {
                ErrorKind::Config
            }
            Error::NonFinite(_) | Error::Singular | Error::Diverged { .. } => ErrorKind::Numerical,
            Error::BadLength { .. }
            | Error::OutOfRange { .. }
            | Error::ShapeMismatch(_)
            | Error::ZeroVariance
            | Error::BadMagic { .. }
            | Error::DimensionMismatch(_)
            | Error::CountMismatch { .. }
            | Error::TruncatedFile { .. }
            | Error::Io { .. }
            | Error::Json(_) => ErrorKind::Data,
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
