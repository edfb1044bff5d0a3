use thiserror::Error;

use crate::classification::ObjectClass;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("incomplete training: no examples for {0:?}")]
    IncompleteTraining(Vec<ObjectClass>),

    #[error("unsupported class for grasping: {0}")]
    UnsupportedClass(ObjectClass),

    #[error("degenerate principal axis: XY projection has norm {0:e}")]
    DegenerateAxis(f64),

    #[error("unsafe clearance: approach height {height:.3} m does not clear {limit:.3} m")]
    UnsafeClearance { height: f64, limit: f64 },

    #[error("no graspable target in scene")]
    NoTarget,

    #[error("could not place {object} without overlap after {attempts} attempts")]
    Placement { object: String, attempts: usize },

    #[error("observation failed after {attempts} attempt(s): {message}")]
    Observation { attempts: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
