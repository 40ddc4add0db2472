use std::path::PathBuf;

use thiserror::Error;

use crate::landmarks::Region;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image data: {0}")]
    CorruptData(String),

    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate subject id `{0}`")]
    DuplicateSubject(String),

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("landmark invariant violated: {0}")]
    InvariantViolation(String),

    #[error("image {width}x{height} is too small for the scale space (minimum {min}x{min})")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("region {0} has no keypoints")]
    MissingRegion(Region),

    #[error("empty feature set")]
    EmptyFeatureSet,

    #[error("degenerate score range: {0}")]
    DegenerateRange(String),

    #[error("invalid belief function: {0}")]
    InvalidBelief(String),

    #[error("total conflict between evidence sources (K = {0})")]
    TotalConflict(f64),

    #[error("degenerate score matrix: {0}")]
    DegenerateMatrix(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
