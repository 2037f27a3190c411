//! Error type of the experiment harness.

use thiserror::Error;

/// Failures of configuration, model runs, fits and report output.
#[derive(Debug, Error)]
pub enum ExperimentError {
    /// The configuration violates an invariant or names an unsupported study.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Precondition of a fit or norm not met.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Failure inside a solver or the ansatz machinery.
    #[error(transparent)]
    Model(#[from] nlacoustics::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    /// True for numerical failures (divergence, loss of positivity, ...),
    /// as opposed to configuration or I/O problems.
    pub fn is_numerical(&self) -> bool {
        use nlacoustics::Error as E;
        matches!(
            self,
            ExperimentError::Model(
                E::Diverged { .. }
                    | E::NumericalFailure(_)
                    | E::NonPositiveDensity { .. }
                    | E::Degenerate { .. }
                    | E::NonFinite(_)
            )
        )
    }
}

/// Result alias of the harness.
pub type Result<T> = std::result::Result<T, ExperimentError>;
