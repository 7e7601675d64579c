use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no edges")]
    EmptyInput,

    #[error("layer ids must be contiguous from 1, missing layer {missing}")]
    LayerGap { missing: usize },

    #[error("layer {layer} has no edges, so its infection threshold is undefined; supply an explicit probability")]
    UndefinedThreshold { layer: usize },

    #[error("no connected network after {attempts} attempts")]
    Disconnected { attempts: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad input data rather than bad arguments or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::EmptyInput
                | Error::LayerGap { .. }
                | Error::UndefinedThreshold { .. }
                | Error::Disconnected { .. }
                | Error::Io(_)
        )
    }

    pub fn is_numeric_error(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
