use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STAGE: i32 = 3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("replay rejected: {0}")]
    Replay(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::UnknownExperiment(_) | HarnessError::Replay(_) => EXIT_CONFIG,
            HarnessError::Stage { .. } | HarnessError::Io { .. } => EXIT_STAGE,
        }
    }

    pub fn stage(stage: &str, err: impl std::fmt::Display) -> Self {
        HarnessError::Stage { stage: stage.to_string(), message: err.to_string() }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }
}

pub type HarnessResult<T> = Result<T, HarnessError>;
