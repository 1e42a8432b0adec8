use std::io;

use thiserror::Error;

/// Problems decoding or validating one of the on-disk formats
/// (EMBX embeddings, CMHW checkpoints, CMHC code files, split manifests).
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported {format} version {found}")]
    UnsupportedVersion { format: &'static str, found: u32 },
    #[error("truncated payload while reading {what}")]
    Truncated { what: &'static str },
    #[error("{count} trailing bytes after {format} payload")]
    TrailingBytes { format: &'static str, count: usize },
    #[error("non-finite value in modality {modality}, row {row}, column {col}")]
    NonFinite { modality: usize, row: usize, col: usize },
    #[error("label value {value} at row {row}, column {col} is not 0/1")]
    InvalidLabel { row: usize, col: usize, value: u8 },
    #[error("row {row} has no label set in a labeled set")]
    EmptyLabelRow { row: usize },
    #[error("duplicate sample id {0}")]
    DuplicateId(u64),
    #[error("inconsistent dimensions: {0}")]
    Inconsistent(String),
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("sample index {index} out of range for {count} samples")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("search over an empty index")]
    EmptyIndex,
    #[error("unknown sample id {0}")]
    UnknownId(u64),
    #[error("average precision is undefined for an empty relevant set")]
    EmptyRelevantSet,
    #[error("no query has a relevant item in the retrieval set")]
    NoEvaluableQueries,
}

impl Error {
    /// True for failures caused by the numerics (NaN/Inf losses or inputs),
    /// as opposed to bad data or bad arguments.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }

    pub fn is_argument(&self) -> bool {
        matches!(self, Error::InvalidArgument(_))
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Format(FormatError::Io(e))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
