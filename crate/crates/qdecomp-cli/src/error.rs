use std::path::PathBuf;

/// Process exit codes of the `qdecomp` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Config = 2,
    Data = 3,
    Estimation = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("data error in {path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("estimation failed: {0}")]
    Estimation(#[from] qdecomp_core::Error),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Data { path: path.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::Config,
            CliError::Io { .. } | CliError::Data { .. } => ExitCode::Data,
            CliError::Estimation(_) => ExitCode::Estimation,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
