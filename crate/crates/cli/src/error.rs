use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Module(#[from] bernsim_core::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),
}

/// The JSON line printed to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config error",
            CliError::Module(_) => "module error",
            CliError::Io { .. } => "io error",
            CliError::Schema(_) => "schema error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Module(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Schema(_) => 5,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (field, message) = match self {
            CliError::Config { field, message } => (Some(field.clone()), message.clone()),
            other => (None, other.to_string()),
        };
        ErrorRecord {
            status: self.status(),
            field,
            message,
        }
    }
}
