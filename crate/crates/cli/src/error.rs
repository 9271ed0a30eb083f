use std::process::ExitCode;

use thiserror::Error;

/// Failure of a run, mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("solver failure ({context}): {message}")]
    Solver { context: String, message: String },
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn solver(context: impl Into<String>, err: impl std::fmt::Display) -> Self {
        RunError::Solver {
            context: context.into(),
            message: err.to_string(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Usage(_) => 1,
            RunError::Solver { .. } | RunError::Io { .. } => 2,
            RunError::Invariant(_) => 3,
        }
    }
}

impl From<RunError> for ExitCode {
    fn from(e: RunError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
