use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
///
/// Variants group into the exit-code classes used by the CLI; see
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error in {}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("bad magic in {}: expected {expected:?}, found {found:?}", path.display())]
    MagicMismatch {
        path: PathBuf,
        expected: [u8; 4],
        found: Vec<u8>,
    },
    #[error("unsupported container in {}: {message}", path.display())]
    UnsupportedFormat { path: PathBuf, message: String },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("row {row} of {model_id} sums to {sum}, outside 1 +/- {tolerance}")]
    RowSumOutOfTolerance {
        model_id: String,
        row: usize,
        sum: f64,
        tolerance: f64,
    },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("deviations sum to {0}, not zero")]
    NonZeroSum(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("need at least {needed} models, got {got}")]
    TooFewModels { needed: usize, got: usize },
    #[error("budget {k} exceeds dataset size {n}")]
    BudgetExceedsDataset { k: usize, n: usize },
    #[error("insufficient models: {0}")]
    InsufficientModels(String),
    #[error("index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("predictor has no payload")]
    EmptyModel,
    #[error("anchor subset carries no weights")]
    MissingWeights,
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("split leaves the {0} side empty")]
    EmptySide(&'static str),
    #[error("unknown model id {0}")]
    UnknownModel(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("stale artifact {}: {what} hash {recorded} != current {current}", path.display())]
    StaleArtifact {
        path: PathBuf,
        what: String,
        recorded: String,
        current: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// Process exit code: 1 schema, 2 invariant or contract, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } => 1,
            Error::MissingFile(_)
            | Error::Io { .. }
            | Error::MagicMismatch { .. }
            | Error::UnsupportedFormat { .. } => 3,
            _ => 2,
        }
    }
}
