//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by grid handling, spectral operators, solvers and the
/// ansatz/remainder machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid, axis or field violates its structural invariants.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    /// An axis name was not found on the grid.
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    /// A spectral operation was requested along a bounded axis.
    #[error("axis `{0}` is not periodic")]
    NonPeriodicAxis(String),
    /// Two fields (or a field and a grid) do not share a grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// The mean-zero precondition of the periodic antiderivative is violated.
    #[error("mean {mean:.3e} along `{axis}` exceeds tolerance {tol:.3e}")]
    NonZeroMean { axis: String, mean: f64, tol: f64 },
    /// Non-finite sample found where finite values are required.
    #[error("non-finite value in {0}")]
    NonFinite(String),
    /// Physical coefficients out of their admissible range.
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),
    /// Coordinate tuple of the wrong length for the frame.
    #[error("coordinate arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
    /// Interpolation point outside a bounded axis.
    #[error("coordinate {value} outside bounded axis `{axis}` range [{lo}, {hi}]")]
    OutOfRange { axis: String, value: f64, lo: f64, hi: f64 },
    /// Field norm exceeded the divergence threshold.
    #[error("solution diverged at evolution value {evol}")]
    Diverged { evol: f64 },
    /// NaN or another numerical breakdown during a computation.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// Density lost positivity.
    #[error("non-positive density (min {min:.3e}) at evolution value {evol}")]
    NonPositiveDensity { min: f64, evol: f64 },
    /// A degeneracy factor such as `1 − αεu_t` dropped below its threshold.
    #[error("degenerate factor {factor:.3e} below threshold {threshold}")]
    Degenerate { factor: f64, threshold: f64 },
    /// An input required by the selected formula is absent or inconsistent.
    #[error("missing or inconsistent input: {0}")]
    MissingInput(String),
    /// Precondition on experiment/fit inputs not met.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Snapshot file format problems.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
