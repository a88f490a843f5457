use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two shapes that must agree do not.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    /// An input that must be non-empty was empty.
    Empty(&'static str),
    /// A configuration value violates its invariant.
    InvalidConfig(String),
    /// An argument is outside the operation's domain.
    InvalidArgument(String),
    /// Training produced a non-finite loss, gradient or parameter.
    Divergence {
        grade: usize,
        epoch: usize,
        detail: &'static str,
    },
    /// Relative error is undefined because every target is zero.
    ZeroTargets,
    /// A requested frequency is above the Nyquist bin of the sampling grid.
    AboveNyquist { frequency: usize, nyquist: usize },
    Idx(IdxError),
    Ppm(PpmError),
}

/// Failure classes of the IDX binary tensor reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdxError {
    /// The first two bytes are not zero, or the header is shorter than four bytes.
    BadMagic,
    /// Only unsigned bytes (type code 0x08) are supported.
    UnsupportedType(u8),
    /// Header or payload is shorter than the dims declare.
    Truncated { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PpmError {
    BadMagic,
    BadHeader(&'static str),
    UnsupportedMaxval(u32),
    Truncated { expected: usize, found: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                context,
                expected,
                found,
            } => write!(f, "{context}: expected dimension {expected}, found {found}"),
            Error::Empty(what) => write!(f, "{what} must not be empty"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Divergence {
                grade,
                epoch,
                detail,
            } => write!(f, "training diverged in grade {grade} at epoch {epoch}: {detail}"),
            Error::ZeroTargets => write!(f, "relative error undefined: all targets are zero"),
            Error::AboveNyquist { frequency, nyquist } => write!(
                f,
                "frequency {frequency} is above the Nyquist bin {nyquist} of the sampling grid"
            ),
            Error::Idx(e) => write!(f, "IDX: {e}"),
            Error::Ppm(e) => write!(f, "PPM: {e}"),
        }
    }
}

impl fmt::Display for IdxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdxError::BadMagic => write!(f, "bad magic number"),
            IdxError::UnsupportedType(code) => {
                write!(f, "unsupported element type 0x{code:02x} (only 0x08 is supported)")
            }
            IdxError::Truncated { expected, found } => {
                write!(f, "truncated stream: expected {expected} bytes, found {found}")
            }
        }
    }
}

impl fmt::Display for PpmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PpmError::BadMagic => write!(f, "not a binary P6 file"),
            PpmError::BadHeader(what) => write!(f, "malformed header: {what}"),
            PpmError::UnsupportedMaxval(v) => write!(f, "unsupported maxval {v} (only 255)"),
            PpmError::Truncated { expected, found } => {
                write!(f, "truncated pixel data: expected {expected} bytes, found {found}")
            }
        }
    }
}

impl From<IdxError> for Error {
    fn from(e: IdxError) -> Self {
        Error::Idx(e)
    }
}

impl From<PpmError> for Error {
    fn from(e: PpmError) -> Self {
        Error::Ppm(e)
    }
}

impl core::error::Error for Error {}
impl core::error::Error for IdxError {}
impl core::error::Error for PpmError {}
