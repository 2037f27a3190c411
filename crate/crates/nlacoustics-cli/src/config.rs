//! Run configuration files: a versioned envelope around one subcommand
//! payload, parsed strictly (unknown keys are errors).

use std::path::{Path, PathBuf};

use nlacoustics::remainders::RemainderOptions;
use nlacoustics::solvers::{KuznetsovSwitches, ParaxialOptions, StepControl, WesterveltSwitches};
use nlacoustics::ModelCoefficients;
use nlacoustics_experiments::config::GridSpec;
use nlacoustics_experiments::presets::InitialCondition;
use nlacoustics_experiments::ExperimentConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// The only configuration schema this build understands.
pub const SCHEMA_VERSION: u32 = 1;

/// Verbosity of the diagnostics written to standard error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LogLevel {
    Error,
    Warn,
    #[default]
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    pub fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
            LogLevel::Trace => log::LevelFilter::Trace,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Top-level configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub log_level: LogLevel,
    /// Exactly one subcommand payload, keyed by the subcommand name.
    pub run: Payload,
}

/// Subcommand payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Solve(SolvePayload),
    Compare(ExperimentConfig),
    Sweep(ExperimentConfig),
    Residual(ResidualPayload),
    Transform(TransformPayload),
}

impl Payload {
    pub fn name(&self) -> &'static str {
        match self {
            Payload::Solve(_) => "solve",
            Payload::Compare(_) => "compare",
            Payload::Sweep(_) => "sweep",
            Payload::Residual(_) => "residual",
            Payload::Transform(_) => "transform",
        }
    }
}

/// Initial time derivative of the wave models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialRate {
    /// `∂t u = −c ∂x1 u`: a wave travelling towards `+x1`.
    #[default]
    RightGoing,
    /// `∂t u = 0`.
    Rest,
}

/// A single model run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvePayload {
    pub coeff: ModelCoefficients,
    #[serde(default)]
    pub grid: GridSpec,
    pub initial: InitialCondition,
    #[serde(default)]
    pub initial_rate: InitialRate,
    /// Evolution span (time `t`, range `z` or slow time `τ`).
    pub span: f64,
    pub steps: StepControl,
    #[serde(default)]
    pub kuznetsov: KuznetsovSwitches,
    #[serde(default)]
    pub westervelt: WesterveltSwitches,
    #[serde(default)]
    pub paraxial: ParaxialOptions,
}

fn default_spacing() -> f64 {
    0.1
}

fn default_refinements() -> usize {
    2
}

/// Remainder evaluation and the consistency oracle for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualPayload {
    pub coeff: ModelCoefficients,
    #[serde(default)]
    pub options: RemainderOptions,
    /// Coarsest spacing of the evolution levels.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Number of spacing halvings of the oracle.
    #[serde(default = "default_refinements")]
    pub refinements: usize,
    /// Grid in the pair's frame; a 24×16 grid of period 2π when omitted.
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

fn one() -> f64 {
    1.0
}

/// Frame-transform parameters (the file names come from the command line).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformPayload {
    #[serde(default = "one")]
    pub c: f64,
    pub eps: f64,
    /// Physical slice coordinate: `x1` for KZK profiles, `t` for NPE profiles.
    #[serde(default)]
    pub at: f64,
}

impl RunConfig {
    /// Parses and checks the schema version.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (this build reads version {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// SHA-256 of the canonical JSON serialization, in hex.
    pub fn hash(&self) -> String {
        hash_json(self)
    }
}

/// SHA-256 of the compact JSON serialization of `value`, in hex.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
