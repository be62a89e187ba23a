use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: file contains no records")]
    EmptyInput(PathBuf),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch for `{name}`: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        name: String,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("empty token sequence")]
    EmptySequence,

    #[error("unattainable quality: target {target} exceeds the curve maximum {max}")]
    UnattainableQuality { target: f64, max: f64 },

    #[error("non-finite loss at batch {batch} (epoch {epoch})")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("forward cache does not belong to a {0} encoder")]
    CacheMismatch(&'static str),

    #[error("segmentation model is inconsistent with the word table: {0}")]
    InconsistentModel(String),

    #[error("need both classes, found only {0}")]
    SingleClass(&'static str),

    #[error("zero variance input")]
    ZeroVariance,

    #[error("checkpoint: bad magic")]
    BadMagic,

    #[error("checkpoint: unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checkpoint: truncated file")]
    Truncated,

    #[error("checkpoint: checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },

    #[error("checkpoint: expected a {expected} model, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("checkpoint: {0}")]
    Corrupt(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
