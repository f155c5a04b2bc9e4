use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("boundary configuration error: {0}")]
    Boundary(String),

    #[error("initial condition is not finite at cell ({j}, {k}): {value}")]
    Initialization { j: isize, k: isize, value: f64 },

    #[error("stencil reads cell ({j}, {k}) outside the defined region")]
    OutOfRange { j: isize, k: isize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("field membership violated at cell ({j}, {k}): ghost {ghost} != {expected}")]
    Membership {
        j: isize,
        k: isize,
        ghost: f64,
        expected: f64,
    },

    #[error("non-finite value produced at cell ({j}, {k})")]
    NonFinite { j: isize, k: isize },

    #[error("geometry mismatch between operands")]
    GeometryMismatch,

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
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

    pub(crate) fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }
}
