//! Study reports and their on-disk artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fit::{DecayFit, EnvelopeFit};

/// One sample of an error (or norm) history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub evol: f64,
    pub error: f64,
}

/// Norm in which a study's series are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Quadrature L² over all compared components.
    #[default]
    L2,
    /// `√(‖∂t e‖² + ‖∇e‖²)`.
    Energy,
    /// `H^s` norm of a single trajectory (decay studies).
    Sobolev(u32),
}

/// Result of one sweep member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberResult {
    pub eps: f64,
    /// Initial perturbation size actually applied.
    pub delta: f64,
    /// Evolution span of the member.
    pub span: f64,
    pub series: Vec<SeriesPoint>,
    /// Failure message when the member did not complete.
    pub failure: Option<String>,
    pub numerical_failure: bool,
    pub envelope: Option<EnvelopeFit>,
    pub decay: Option<DecayFit>,
    /// Largest L² norm of the forcing of a perturbed paraxial run.
    pub source_norm: Option<f64>,
    /// `sup |∂τ I|` over the unforced paraxial run.
    pub sup_dtau: Option<f64>,
}

/// Slope of `log error` vs `log ε` at one fraction of the coarsest horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub fraction: f64,
    pub evol: f64,
    pub eps: Vec<f64>,
    pub errors: Vec<f64>,
    /// `None` when undefined (zero or missing errors).
    pub slope: Option<f64>,
}

/// Pass/fail outcome of one named acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(criterion: &str, passed: bool, detail: String) -> Self {
        Verdict { criterion: criterion.to_string(), passed, detail }
    }
}

/// Where and how a study ran.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RuntimeInfo {
    pub tool_version: String,
    pub platform: String,
    pub threads: usize,
    pub wall_seconds: f64,
    /// Wall time of each member, in ε order.
    pub member_seconds: Vec<f64>,
}

impl RuntimeInfo {
    pub fn new(threads: usize, wall_seconds: f64, member_seconds: Vec<f64>) -> Self {
        RuntimeInfo {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            platform: platform(),
            threads,
            wall_seconds,
            member_seconds,
        }
    }
}

/// `os-arch` of the running binary.
pub fn platform() -> String {
    format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH)
}

/// Full outcome of a study.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub pair: String,
    pub config_hash: String,
    pub seed: u64,
    pub norm: NormKind,
    pub members: Vec<MemberResult>,
    pub slopes: Vec<SlopeFit>,
    /// Median of the slopes over the horizon fractions.
    pub median_slope: Option<f64>,
    pub flags: Vec<String>,
    pub verdicts: Vec<Verdict>,
    pub runtime: RuntimeInfo,
}

impl Report {
    /// True when every verdict passed.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Decimal text with 17 significant digits (round-trips every `f64`).
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// `errors.csv` contents: `eps,evol,l2_error`, one row per sample.
pub fn errors_csv(report: &Report) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eps", "evol", "l2_error"])?;
    for m in &report.members {
        for p in &m.series {
            w.write_record([format_value(m.eps), format_value(p.evol), format_value(p.error)])?;
        }
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Parses `errors.csv` back into `(eps, evol, error)` rows.
pub fn parse_errors_csv(bytes: &[u8]) -> Result<Vec<(f64, f64, f64)>> {
    let mut r = csv::Reader::from_reader(bytes);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log plot of every member's positive samples; `None` when nothing is
/// plottable.
pub fn plot_svg(report: &Report) -> Option<String> {
    let curves: Vec<(f64, Vec<(f64, f64)>)> = report
        .members
        .iter()
        .map(|m| {
            let pts = m
                .series
                .iter()
                .filter(|p| p.evol > 0.0 && p.error > 0.0)
                .map(|p| (p.evol.log10(), p.error.log10()))
                .collect();
            (m.eps, pts)
        })
        .filter(|(_, p): &(f64, Vec<(f64, f64)>)| !p.is_empty())
        .collect();
    if curves.is_empty() {
        return None;
    }
    let all = curves.iter().flat_map(|(_, p)| p.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (w, h, pad) = (640.0, 420.0, 50.0);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-12) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0).max(1e-12) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">log10 evolution [{x0:.2}, {x1:.2}]</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">log10 error [{y0:.2}, {y1:.2}]</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (i, (eps, pts)) in curves.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ =
            writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{colour}">eps = {eps}</text>"#,
            w - pad - 90.0,
            pad + 15.0 + 14.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

/// Writes `report.json`, `errors.csv` and (when there is data) `plot.svg`
/// into `dir`, creating it if needed.
pub fn emit_report(report: &Report, dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let json = dir.join("report.json");
    let mut text = serde_json::to_vec_pretty(report)?;
    text.push(b'\n');
    fs::write(&json, text)?;
    let csv = dir.join("errors.csv");
    fs::write(&csv, errors_csv(report)?)?;
    let svg = match plot_svg(report) {
        Some(body) => {
            let p = dir.join("plot.svg");
            fs::write(&p, body)?;
            Some(p)
        }
        None => None,
    };
    Ok(ReportFiles { json, csv, svg })
}

/// Reads a `report.json` written by [`emit_report`].
pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}
