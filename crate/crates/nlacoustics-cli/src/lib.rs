//! Command-line front end of the nonlinear-acoustics toolkit.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure,
//! 3 failed acceptance verdict.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod transform;

pub use cli::Cli;
pub use commands::run;
pub use error::{CliError, Result};
