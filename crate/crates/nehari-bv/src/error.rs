use std::path::PathBuf;

use thiserror::Error;

/// A configuration file that could not be turned into a [`RunConfig`](crate::RunConfig).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    /// The text is not valid TOML.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        /// 1-based line.
        line: usize,
        /// 1-based column.
        column: usize,
        /// Parser message.
        message: String,
    },
    /// A key that no section accepts.
    #[error("unknown key `{key}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownKey {
        /// Dotted path of the key.
        key: String,
        /// Closest known key in the same table.
        suggestion: Option<String>,
    },
    /// A value outside its documented range, or of the wrong type.
    #[error("invalid `{field}`: {message}")]
    Invalid {
        /// Dotted path of the field.
        field: String,
        /// What is wrong with it.
        message: String,
    },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), message: message.into() }
    }
}

/// Failure of a run.
#[derive(Debug, Error)]
pub enum RunError {
    /// Invalid configuration.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// A file could not be read or written.
    #[error("{}: {source}", path.display())]
    Io {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// A command failed inside the solver library.
    #[error("{command}: {source}")]
    Command {
        /// Command that failed.
        command: &'static str,
        /// Library error.
        source: nehari_core::Error,
    },
    /// A command ran but its result is not acceptable.
    #[error("{command}: {message}")]
    Rejected {
        /// Command that produced the result.
        command: &'static str,
        /// Reason.
        message: String,
    },
}

impl RunError {
    /// Process exit status for this error: 2 for configuration problems, 3 for
    /// solver or certificate failures, 1 for file-system errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Command { .. } | RunError::Rejected { .. } => 3,
            RunError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io { path: path.into(), source }
    }
}
