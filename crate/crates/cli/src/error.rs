use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: line {line}, column {column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Model(#[from] bellhist::Error),
    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn field(field: impl Into<String>, message: impl std::fmt::Display) -> Self {
        CliError::Field {
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// Input problems map to exit status 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            CliError::Parse { .. } | CliError::Field { .. } | CliError::Model(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
