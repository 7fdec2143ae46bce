use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor dimensions disagree with what an operation expects.
    #[error("shape error in {tensor}: expected {expected}, got {actual}")]
    Shape {
        tensor: String,
        expected: String,
        actual: String,
    },

    /// Input outside an operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input file.
    #[error("parse error at line {line}{}: {message}", field.as_ref().map(|f| format!(" (field `{f}`)")).unwrap_or_default())]
    Parse {
        line: usize,
        field: Option<String>,
        message: String,
    },

    /// Record-level validation failure in an otherwise well-formed file.
    #[error("validation error at line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// Non-finite value produced during computation.
    #[error("numeric error at {location}: {message}")]
    Numeric { location: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(tensor: impl Into<String>, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            tensor: tensor.into(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: usize, field: Option<&str>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field: field.map(str::to_string),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
