use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage}: missing artifact {path} (run the upstream stage first)")]
    MissingArtifact { stage: &'static str, path: PathBuf },

    #[error("invalid configuration:\n{}", .0.iter().map(|p| format!("  - {p}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<String>),

    #[error(
        "{stage}: artifact {path} was produced by configuration {found}, current configuration is {expected}; rerun the upstream stages"
    )]
    Lineage {
        stage: &'static str,
        path: PathBuf,
        found: String,
        expected: String,
    },

    #[error("output directory is locked by another run ({0}); remove it if no run is active")]
    Locked(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] anomale_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingArtifact { .. } => 2,
            CliError::Config(_) => 3,
            CliError::Lineage { .. } => 4,
            CliError::Locked(_) => 5,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
