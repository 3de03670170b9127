use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    /// Config parsed but refers to something that does not exist.
    #[error("validation: {0}")]
    Validation(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: volspill_core::Error,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn stage(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Validation(_) => "validation",
            CliError::Stage { stage, .. } => stage,
            CliError::Io { .. } | CliError::Csv(_) => "output",
        }
    }

    /// Process exit code: 2 for bad input, 1 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 2,
            _ => 1,
        }
    }

    /// Machine-readable error report.
    pub fn to_json(&self) -> String {
        let cause = match self {
            CliError::Stage { source, .. } => source.to_string(),
            CliError::Io { source, .. } => source.to_string(),
            other => other.to_string(),
        };
        json!({
            "status": "error",
            "stage": self.stage(),
            "error": cause,
            "message": self.to_string(),
        })
        .to_string()
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> StageExt<T> for volspill_core::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
