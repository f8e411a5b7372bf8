use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while loading worlds or solving abstractions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("grid is {rows}x{cols}; expected a square with power-of-two side (use padding to embed it)")]
    Dimension { rows: usize, cols: usize },

    #[error("{what}: shapes differ ({expected:?} vs {found:?})")]
    ShapeMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("weights cannot be normalized (sum = {0})")]
    Weights(f64),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("node level {level} out of range for depth {depth}")]
    Level { level: u8, depth: u8 },

    #[error("selection has {found} entries, expected {expected}")]
    SelectionSize { expected: usize, found: usize },

    #[error("selection violates precedence at {0} (parent, child) pairs")]
    Precedence(usize),

    #[error("depth {depth} exceeds the enumeration cap {cap}")]
    EnumerationCap { depth: u8, cap: u8 },

    #[error("invalid solver configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Malformed {
            what,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
