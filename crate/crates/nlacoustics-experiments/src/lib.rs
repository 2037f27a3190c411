//! Configured experiments over the nonlinear-acoustics model hierarchy:
//! ε-scaling studies between model pairs, Gronwall-envelope checks of a
//! perturbed paraxial run, viscous decay fits, and machine-readable reports.
//!
//! Sweep members are independent; with the default `parallel` feature they
//! run concurrently on a rayon pool sized by the `THREADS` environment
//! variable, otherwise sequentially. Reports are assembled in ε order either
//! way, so their content does not depend on the schedule.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values, and
// index loops over several parallel arrays read better than zipped iterators.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod fit;
pub mod norms;
pub mod presets;
pub mod report;
pub mod study;

pub use config::{ExperimentConfig, StudyPair};
pub use error::{ExperimentError, Result};
pub use fit::{decay_fit, decay_fit_series, gronwall_envelope_check, power_law_slope, EnvelopeForm};
pub use norms::{l2_error, Comparable};
pub use report::{emit_report, Report};
pub use study::{scaling_study, scaling_study_with, Execution};
