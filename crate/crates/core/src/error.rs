use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{column}`")]
    MissingColumn { column: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("data error at row {row}: {message}")]
    Data { row: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a location, e.g. a sample index or grid cell.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 1 for numeric failures, 2 for config/schema/data failures.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::NonConvergence { .. } | Error::Domain(_) => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::MissingColumn { .. } | Error::Schema(_) => "schema",
            Error::Format(_) => "format",
            Error::Data { .. } => "data",
            Error::Domain(_) => "domain",
            Error::Config { .. } => "config",
            Error::NonConvergence { .. } => "numeric",
            Error::Io { .. } => "io",
            Error::Context { .. } => unreachable!(),
        }
    }

    /// Field name for config errors, column name for schema errors.
    pub fn field(&self) -> Option<&str> {
        match self.root() {
            Error::Config { field, .. } => Some(field),
            Error::MissingColumn { column } => Some(column),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "field": self.field(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}
