use std::path::PathBuf;

use crate::geometry::QuadValidity;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("singular matrix (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("near-degenerate product: bottom-right entry {value:e} too close to zero")]
    NearDegenerate { value: f64 },

    #[error("point maps to infinity (w = {w:e})")]
    PointAtInfinity { w: f64 },

    #[error("quad is not usable: {0:?}")]
    InvalidQuad(QuadValidity),

    #[error("no valid transform after {attempts} attempts")]
    SamplingFailed { attempts: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),

    #[error("jpeg encoder: {0}")]
    Encode(#[from] jpeg_encoder::EncodingError),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no samples")]
    NoSamples,

    #[error("unmatched ids: {}", .0.join(", "))]
    UnmatchedIds(Vec<String>),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("size mismatch: expected {expected:?}, got {actual:?}")]
    SizeMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("unknown perturbation `{0}`")]
    UnknownPerturbation(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
