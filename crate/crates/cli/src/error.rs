use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },

    #[error("invalid config {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("cannot write output: {0}")]
    Write(#[from] io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] bregcirc::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 1 for numerical failures, 2 for usage and configuration errors.
    pub fn exit_code(&self) -> u8 {
        use bregcirc::Error as E;
        match self {
            CliError::Core(E::InfeasibleDomain | E::NotConverged { .. } | E::CrossCheck { .. }) => 1,
            CliError::Write(_) | CliError::Csv(_) => 1,
            _ => 2,
        }
    }
}
