//! Command-line grammar.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nlacoustics::grid::Frame;

use crate::config::LogLevel;

#[derive(Debug, Parser)]
#[command(
    name = "nlacoustics",
    version,
    about = "Nonlinear-acoustics model hierarchy: solvers, remainders, frame transforms and epsilon-scaling studies"
)]
pub struct Cli {
    /// Validate the configuration and print the resolved plan without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Overrides the configuration's log level.
    #[arg(long, global = true, value_enum)]
    pub log_level: Option<LogLevel>,
    /// Overrides the configuration's output directory.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrates one model and writes its trajectory.
    Solve {
        #[arg(long, value_enum)]
        model: SolveModel,
        #[arg(long)]
        config: PathBuf,
    },
    /// Runs both members of a model pair for every ε and writes the error report.
    Compare {
        /// Pair tag, e.g. `ns-kuznetsov` or `kuznetsov-kzk`.
        #[arg(long)]
        pair: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Runs a scaling study and judges its acceptance verdicts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluates the remainder of a pair and runs its consistency oracle.
    Residual {
        /// Remainder pair tag, e.g. `ns-npe`.
        #[arg(long)]
        pair: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Resamples a PAF1 field from one frame into another.
    Transform {
        #[arg(long, value_enum)]
        from: FrameArg,
        #[arg(long, value_enum)]
        to: FrameArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Configuration with a `transform` payload (flags below override it).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Mach parameter ε of the paraxial scaling.
        #[arg(long)]
        eps: Option<f64>,
        /// Sound speed (default 1).
        #[arg(long)]
        c: Option<f64>,
        /// Physical slice coordinate: `x1` of a KZK profile, `t` of an NPE profile (default 0).
        #[arg(long)]
        at: Option<f64>,
    },
}

/// Models `solve` can integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveModel {
    Kuznetsov,
    Westervelt,
    Kzk,
    Npe,
    /// Viscous isentropic Navier–Stokes.
    Ns,
    /// Inviscid isentropic Euler (ν forced to 0).
    Euler,
}

impl SolveModel {
    pub fn tag(self) -> &'static str {
        match self {
            SolveModel::Kuznetsov => "kuznetsov",
            SolveModel::Westervelt => "westervelt",
            SolveModel::Kzk => "kzk",
            SolveModel::Npe => "npe",
            SolveModel::Ns => "ns",
            SolveModel::Euler => "euler",
        }
    }

    pub fn frame(self) -> Frame {
        match self {
            SolveModel::Kzk => Frame::Kzk,
            SolveModel::Npe => Frame::Npe,
            _ => Frame::Physical,
        }
    }

    /// Name of the evolution variable.
    pub fn evolution(self) -> &'static str {
        match self {
            SolveModel::Kzk => "z",
            SolveModel::Npe => "tau",
            _ => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameArg {
    Physical,
    Kzk,
    Npe,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Frame {
        match f {
            FrameArg::Physical => Frame::Physical,
            FrameArg::Kzk => Frame::Kzk,
            FrameArg::Npe => Frame::Npe,
        }
    }
}
