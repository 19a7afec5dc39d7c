use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two human-driven vehicles overlapped. IDM with MOBIL safety checks
    /// should never allow this, so the run is aborted.
    #[error("simulator defect: human vehicles {follower} and {leader} collided at t={clock:.1}s")]
    HumanCollision {
        follower: u64,
        leader: u64,
        clock: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint format mismatch: expected {expected}, found {found}")]
    CheckpointFormat { expected: String, found: String },

    #[error("non-finite loss in update {update} (epoch {epoch}, minibatch {minibatch}): {detail}")]
    NonFiniteLoss {
        update: u64,
        epoch: usize,
        minibatch: usize,
        detail: String,
    },

    #[error("environment {env} failed at timestep {timestep}: {source}")]
    Environment {
        env: usize,
        timestep: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::HumanCollision { .. } => "simulator",
            Error::Config(_) => "config",
            Error::CheckpointFormat { .. } => "checkpoint_format",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Environment { .. } => "environment",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
