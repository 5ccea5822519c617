use alloc::string::String;
use core::fmt;

/// Error type shared by all core modules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A numeric argument lies outside the model's domain
    /// (non-positive depth, invalid camera parameters, ...).
    Domain(String),
    /// Shapes or sizes of inputs disagree.
    Structural(String),
    /// A call violates a usage precondition (index out of range,
    /// enumeration bound exceeded, too few observations, ...).
    Usage(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Structural(msg) => write!(f, "structural error: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
