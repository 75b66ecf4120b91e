use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] evindex::Error),

    /// Malformed input file content, with its location.
    #[error("{source_name}: {message}")]
    Data { source_name: String, message: String },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 = parameter, 3 = data or domain, 4 = numerical singularity.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => core_exit_code(e),
            CliError::Data { .. } => 3,
            CliError::Usage(_) | CliError::Io { .. } => 2,
        }
    }
}

pub fn core_exit_code(e: &evindex::Error) -> i32 {
    match e {
        evindex::Error::Parameter(_) => 2,
        evindex::Error::Domain(_) => 3,
        evindex::Error::Singular { .. } => 4,
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
