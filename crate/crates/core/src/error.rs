use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("buffer holds {actual} values, expected {expected}")]
    BufferSize { expected: usize, actual: usize },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },

    #[error("label {0} is outside 0..=20 and is not VOID")]
    InvalidLabel(u8),

    #[error("label map has no non-VOID pixels")]
    EmptyLabelMap,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("training loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("malformed model file: {0}")]
    MalformedModelFile(String),

    #[error("user LUT requested but the bank has none")]
    MissingUserLut,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("missing split file {0}")]
    MissingSplitFile(PathBuf),

    #[error("image for id {id} not found at {path}")]
    MissingImage { id: String, path: PathBuf },

    #[error("label for id {id} not found at {path}")]
    MissingLabel { id: String, path: PathBuf },

    #[error("{path}: unsupported label index {index}")]
    UnsupportedLabelIndex { path: PathBuf, index: u8 },

    #[error("{0}: label PNG is not palette-indexed 8-bit")]
    NotPaletteIndexed(PathBuf),

    #[error("{path}: {source}")]
    PngDecode {
        path: PathBuf,
        #[source]
        source: png::DecodingError,
    },

    #[error("entry {id}: {source}")]
    Entry {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Strips `Entry` wrappers added while processing corpus items.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Entry { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
