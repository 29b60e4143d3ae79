use std::path::{Path, PathBuf};

use crate::config::ConfigError;

/// Exit status for bad input.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit status for a numerical failure.
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] rsc_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed data: {0}")]
    Format(String),
    #[error("report refused: {0}")]
    Report(String),
}

impl ToolError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ToolError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::Core(e) if !e.is_validation() => EXIT_NUMERIC,
            _ => EXIT_VALIDATION,
        }
    }
}
