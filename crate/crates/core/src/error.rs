//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors produced by the decoding core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A precondition on an operation's arguments was violated.
    InvalidArgument(String),
    /// Point set cannot be triangulated (collinear/coplanar input).
    DegenerateGeometry(String),
    /// An internal invariant that valid inputs cannot break was violated.
    InternalInvariant(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DegenerateGeometry(msg) => write!(f, "degenerate geometry: {msg}"),
            Error::InternalInvariant(msg) => write!(f, "internal invariant violated: {msg}"),
        }
    }
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
