use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, configuration or input data.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] soniq_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Quantum and classical moments disagree.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for usage and input problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                soniq_core::Error::Io { .. }
                | soniq_core::Error::Parse { .. }
                | soniq_core::Error::InvalidArgument(_)
                | soniq_core::Error::TooShort { .. }
                | soniq_core::Error::NotPowerOfTwo { .. }
                | soniq_core::Error::Capacity { .. }
                | soniq_core::Error::DimensionMismatch { .. } => 2,
                _ => 1,
            },
            CliError::Verification(_) => 1,
            CliError::Stage { source, .. } => source.exit_code(),
        }
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T, E: Into<CliError>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError::Stage {
            stage,
            source: Box::new(e.into()),
        })
    }
}
