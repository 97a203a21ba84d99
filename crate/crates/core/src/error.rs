use thiserror::Error;

use crate::model::ItemId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("clutter graph has {edges} cyclic edges, more than the brute-force cap of {cap}; scene graphs are expected to be small")]
    GraphTooLarge { edges: usize, cap: usize },

    #[error("item {0} does not fit the container footprint in any orientation")]
    InfeasibleItem(ItemId),

    #[error("contour of item {0} lies outside the scene maps")]
    OutOfBounds(ItemId),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
