use std::path::Path;

use thiserror::Error;

/// Failures mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed configuration.
    #[error("cli: configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Run(#[from] cohawkes::Error),

    #[error("cli: I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    /// A verification suite ran but some checks rejected.
    #[error("stats-verify: {failed} of {total} checks failed")]
    Verification { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
