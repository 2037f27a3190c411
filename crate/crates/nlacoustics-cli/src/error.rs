//! Errors of the command-line tool and their exit codes.

use std::path::{Path, PathBuf};

use nlacoustics_experiments::ExperimentError;
use thiserror::Error;

/// Everything that can end a run early, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid configuration, or unusable arguments (exit 1).
    #[error("configuration error: {0}")]
    Config(String),
    /// Reading inputs or writing outputs failed (exit 1).
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    /// A solver diverged or lost admissibility (exit 2).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A sweep completed but an acceptance verdict failed (exit 3).
    #[error("acceptance verdict failed: {0}")]
    Verdict(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
            CliError::Verdict(_) => 3,
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().to_path_buf(), source }
    }
}

fn is_numerical(e: &nlacoustics::Error) -> bool {
    use nlacoustics::Error as E;
    matches!(
        e,
        E::Diverged { .. }
            | E::NumericalFailure(_)
            | E::NonPositiveDensity { .. }
            | E::Degenerate { .. }
            | E::NonFinite(_)
    )
}

impl From<nlacoustics::Error> for CliError {
    fn from(e: nlacoustics::Error) -> Self {
        if is_numerical(&e) {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Model(m) => m.into(),
            ExperimentError::Io(io) => CliError::Io { path: PathBuf::new(), source: io },
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
