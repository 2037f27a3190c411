//! On-disk artifacts of a run: trajectory directories with their index, and
//! the manifest that makes every run reproducible.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nlacoustics::grid::Field;
use nlacoustics::ns_euler::{FlowSnapshot, StateLaw};
use nlacoustics::paf1;
use nlacoustics::solvers::ModelState;
use nlacoustics::ModelCoefficients;
use nlacoustics_experiments::report::platform;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Version of this tool, recorded in manifests and indexes.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub platform: String,
    pub subcommand: String,
    /// Command-line arguments after the program name.
    pub arguments: Vec<String>,
    pub schema_version: u32,
    /// SHA-256 of the canonical run configuration.
    pub config_hash: String,
    /// The resolved configuration itself.
    pub config: serde_json::Value,
    /// Files written by the run, relative to the manifest.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(subcommand: &str, config_hash: String, config: serde_json::Value) -> Self {
        Manifest {
            tool_version: TOOL_VERSION.to_string(),
            platform: platform(),
            subcommand: subcommand.to_string(),
            arguments: std::env::args().skip(1).collect(),
            schema_version: crate::config::SCHEMA_VERSION,
            config_hash,
            config,
            outputs: Vec::new(),
        }
    }
}

/// Pretty JSON plus a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// One entry of a trajectory index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub index: usize,
    pub evol: f64,
    /// Role (`primary`, `rate`, `rho`, `momentum`) → file name.
    pub files: BTreeMap<String, String>,
}

/// `index.json` of a trajectory directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryIndex {
    pub model: String,
    /// Name of the evolution variable (`t`, `z` or `tau`).
    pub evolution: String,
    pub config_hash: String,
    pub tool_version: String,
    pub coefficients: ModelCoefficients,
    /// Reference pressure of the state law (flow trajectories only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p0: Option<f64>,
    pub snapshots: Vec<IndexEntry>,
}

fn write_field(
    dir: &Path,
    name: String,
    field: &Field,
    files: &mut BTreeMap<String, String>,
    role: &str,
) -> Result<()> {
    let path = dir.join(&name);
    paf1::write_file(field, &path).map_err(|e| match e {
        nlacoustics::Error::Io(io) => CliError::io(&path, io),
        other => other.into(),
    })?;
    files.insert(role.to_string(), name);
    Ok(())
}

/// Writes a model trajectory as `NNNNN.paf1` (and `NNNNN_rate.paf1` for
/// wave models) plus `index.json`; returns the index path.
pub fn write_model_trajectory(
    dir: &Path,
    model: &str,
    evolution: &str,
    coefficients: ModelCoefficients,
    config_hash: &str,
    traj: &[ModelState],
) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut snapshots = Vec::with_capacity(traj.len());
    for (index, s) in traj.iter().enumerate() {
        let mut files = BTreeMap::new();
        write_field(dir, format!("{index:05}.paf1"), &s.primary, &mut files, "primary")?;
        if let Some(v) = &s.velocity {
            write_field(dir, format!("{index:05}_rate.paf1"), v, &mut files, "rate")?;
        }
        snapshots.push(IndexEntry { index, evol: s.evol, files });
    }
    let index = TrajectoryIndex {
        model: model.to_string(),
        evolution: evolution.to_string(),
        config_hash: config_hash.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        coefficients,
        p0: None,
        snapshots,
    };
    let path = dir.join("index.json");
    write_json(&path, &index)?;
    Ok(path)
}

/// Writes a flow trajectory as `NNNNN_rho.paf1` / `NNNNN_momentum.paf1`
/// plus an `index.json` recording `p0`, `ν` and `ε`.
pub fn write_flow_trajectory(
    dir: &Path,
    model: &str,
    coefficients: ModelCoefficients,
    law: StateLaw,
    config_hash: &str,
    traj: &[FlowSnapshot],
) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut snapshots = Vec::with_capacity(traj.len());
    for (index, s) in traj.iter().enumerate() {
        let mut files = BTreeMap::new();
        write_field(dir, format!("{index:05}_rho.paf1"), &s.state.rho, &mut files, "rho")?;
        write_field(dir, format!("{index:05}_momentum.paf1"), &s.state.momentum, &mut files, "momentum")?;
        snapshots.push(IndexEntry { index, evol: s.t, files });
    }
    let index = TrajectoryIndex {
        model: model.to_string(),
        evolution: "t".into(),
        config_hash: config_hash.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        coefficients,
        p0: Some(law.p0),
        snapshots,
    };
    let path = dir.join("index.json");
    write_json(&path, &index)?;
    Ok(path)
}
