use alloc::string::String;
use core::fmt;

use crate::mdp::Violation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An MDP table failed validation.
    InvalidMdp(Violation),
    /// A parameter is outside its domain. Carries the parameter name.
    InvalidInput { field: &'static str, reason: String },
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A runtime invariant of the protocol or harness was breached.
    Invariant(String),
}

impl Error {
    pub(crate) fn input(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMdp(v) => write!(f, "invalid MDP: {v}"),
            Error::InvalidInput { field, reason } => write!(f, "invalid `{field}`: {reason}"),
            Error::IndexOutOfRange { what, index, len } => {
                write!(f, "{what} index {index} out of range (len {len})")
            }
            Error::ShapeMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected {expected} entries, found {found}"),
            Error::Invariant(msg) => write!(f, "invariant breach: {msg}"),
        }
    }
}
