use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u16, found: u16 },

    #[error("truncated {0}")]
    Truncated(&'static str),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(
        "line {line}: segment [{start}, {end}) overlaps the previous segment ending at {prev_end}"
    )]
    Overlap {
        line: usize,
        start: u64,
        end: u64,
        prev_end: u64,
    },

    #[error("phones missing from the AF map: {}", .0.join(", "))]
    UnmappedPhones(Vec<String>),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for violations of the crate's own invariants (as opposed to bad input).
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}
