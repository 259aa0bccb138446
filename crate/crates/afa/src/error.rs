use std::path::PathBuf;

use afa_core::Error as CoreError;

/// Errors of the std layer, grouped by process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AfaError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {msg}")]
    Data { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: CoreError,
    },
    #[error("no images with ground truth under {0}")]
    EmptyDataset(PathBuf),
}

pub type Result<T, E = AfaError> = std::result::Result<T, E>;

impl AfaError {
    pub fn data(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        AfaError::Data { path: path.into(), msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AfaError::Io { path: path.into(), source }
    }

    /// 1 config, 2 data, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            AfaError::Config(_) => 1,
            AfaError::Data { .. } | AfaError::Io { .. } | AfaError::EmptyDataset(_) => 2,
            AfaError::Stage { source, .. } => match source {
                CoreError::InvalidParameter(_) => 1,
                CoreError::Invariant(_) => 3,
                _ => 2,
            },
        }
    }
}

/// Tags a core error with the stage that raised it.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for afa_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| AfaError::Stage { stage, source })
    }
}
