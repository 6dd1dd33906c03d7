use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the training engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Two shapes that must agree do not.
    #[error("{context}: shape {left:?} is incompatible with {right:?}")]
    Shape {
        context: String,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    /// An argument or configuration value is outside its allowed domain.
    #[error("invalid value: {0}")]
    Validation(String),

    /// A computation produced NaN or infinity.
    #[error("non-finite value: {0}")]
    Numeric(String),

    /// An operation was invoked in the wrong state (e.g. backward before forward).
    #[error("invalid state: {0}")]
    State(String),

    /// Malformed binary input.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("dataset is empty: {0}")]
    DatasetEmpty(String),

    /// Experiment configuration could not be resolved.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(context: impl Into<String>, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            context: context.into(),
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
