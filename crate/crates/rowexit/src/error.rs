use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: cannot decode image: {reason}", path.display())]
    Decode { path: PathBuf, reason: String },
    #[error("{}:{line}: {reason}", path.display())]
    Manifest { path: PathBuf, line: usize, reason: String },
    #[error("{}: no trial rows", path.display())]
    EmptyInput { path: PathBuf },
    #[error("{}: {reason}", path.display())]
    Schema { path: PathBuf, reason: String },
    #[error("replay aborted: {0}")]
    ReplayAbort(rowexit_core::Error),
    #[error(transparent)]
    Pipeline(#[from] rowexit_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit status: 2 for configuration, 3 for input/output, 4 for an
    /// aborted replay, 1 for anything the pipeline rejects.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. }
            | CliError::Decode { .. }
            | CliError::Manifest { .. }
            | CliError::EmptyInput { .. }
            | CliError::Schema { .. } => 3,
            CliError::ReplayAbort(_) => 4,
            CliError::Pipeline(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
