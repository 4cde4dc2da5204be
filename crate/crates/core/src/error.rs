use std::fmt;

/// A single reason a warping path is not valid for a given grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathViolation {
    Empty,
    BadStart { found: (usize, usize) },
    BadEnd { found: (usize, usize), expected: (usize, usize) },
    IllegalStep { index: usize, from: (usize, usize), to: (usize, usize) },
    OutOfRange { index: usize, cell: (usize, usize) },
}

impl fmt::Display for PathViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathViolation::Empty => write!(f, "path is empty"),
            PathViolation::BadStart { found } => write!(f, "path starts at {found:?}, not (0, 0)"),
            PathViolation::BadEnd { found, expected } => {
                write!(f, "path ends at {found:?}, expected {expected:?}")
            }
            PathViolation::IllegalStep { index, from, to } => {
                write!(f, "illegal step {from:?} -> {to:?} at position {index}")
            }
            PathViolation::OutOfRange { index, cell } => {
                write!(f, "cell {cell:?} at position {index} is outside the grid")
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("feature dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid warping path: {}", join_violations(.0))]
    InvalidPath(Vec<PathViolation>),

    /// The quadratic-memory oracle could not allocate its table.
    #[error("cannot allocate {cells} DP cells (textbook DTW needs about {bytes} bytes at 4 bytes/cell)")]
    Resource { cells: u128, bytes: u128 },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[PathViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format { offset, message: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
