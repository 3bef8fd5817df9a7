use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    FaceIndexOutOfRange { face: usize, index: i64, count: usize },

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("point is at or behind the eye (camera depth {depth})")]
    BehindEye { depth: f64 },

    #[error("empty face list")]
    EmptyFaces,

    #[error("distance transform target class is empty")]
    EmptyTargetClass,

    #[error("mask contains a single class; boundary weights need both")]
    SingleClassMask,

    #[error("label colors {a:?} and {b:?} are ambiguous at tolerance {tolerance}")]
    AmbiguousColors { a: [u8; 3], b: [u8; 3], tolerance: u8 },

    #[error("IoU denominator is zero")]
    ZeroDenominator,

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value in {term}")]
    NonFinite { term: String },

    #[error("mesh labels without a matching image color: {}", .0.join(", "))]
    UnmatchedLabels(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
