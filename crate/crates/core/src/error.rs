use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violates a precondition (negative time, mismatched grids, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to reach its target accuracy or went unstable.
    #[error("numeric error: {message} (achieved tolerance {achieved:.3e})")]
    Numeric { message: String, achieved: f64 },

    /// Malformed text input (CSV tables and similar).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn numeric(msg: impl Into<String>, achieved: f64) -> Self {
        Error::Numeric {
            message: msg.into(),
            achieved,
        }
    }
}
