//! Least-squares fits: power-law slopes, Gronwall envelopes, decay rates.

use nlacoustics::solvers::{ModelKind, ModelState};
use nlacoustics::ModelCoefficients;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};
use crate::norms::sobolev_norm;

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `log error` against `log ε`. `None` when fewer than two points
/// are given or any error is zero or non-finite (the slope is undefined).
pub fn power_law_slope(eps: &[f64], errors: &[f64]) -> Option<f64> {
    if eps.len() != errors.len() || errors.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    linear_fit(&lx, &ly).map(|(s, _)| s)
}

/// Median of the finite values; `None` if there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Shape of a Gronwall envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeForm {
    /// `(C2/2)·ε·z·e^{C1 z/2}`, the bound of the perturbed paraxial comparison.
    #[default]
    LinearTimesExponential,
}

/// Slack allowed between a measured series and its fitted envelope.
pub const ENVELOPE_SLACK: f64 = 1.1;
/// Allowed relative spread of the envelope constants across a sweep.
pub const CONSTANT_SPREAD: f64 = 0.25;

/// Fitted envelope of one error series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
    /// `max e(z)/envelope(z)` over the positive samples.
    pub max_ratio: f64,
    /// `max_ratio ≤ 1.1`.
    pub within_envelope: bool,
}

impl EnvelopeFit {
    pub fn envelope(&self, z: f64) -> f64 {
        0.5 * self.c2 * self.eps * z * (0.5 * self.c1 * z).exp()
    }
}

/// Least-squares fit of `log(e/z) = log(C2 ε/2) + (C1/2) z` over the samples
/// with `z > 0` and `e > 0`, and the pointwise check `e ≤ 1.1·envelope`.
pub fn gronwall_envelope_check(series: &[(f64, f64)], eps: f64, form: EnvelopeForm) -> Result<EnvelopeFit> {
    let EnvelopeForm::LinearTimesExponential = form;
    if series.len() < 4 {
        return Err(ExperimentError::InvalidInput(format!(
            "an envelope fit needs at least 4 samples, got {}",
            series.len()
        )));
    }
    if series.iter().any(|&(z, e)| !(z.is_finite() && e.is_finite() && e >= 0.0)) {
        return Err(ExperimentError::InvalidInput("error series must be finite and nonnegative".into()));
    }
    if !(eps > 0.0) {
        return Err(ExperimentError::InvalidInput("eps must be positive".into()));
    }
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|&(z, e)| z > 0.0 && e > 0.0).collect();
    if pts.is_empty() {
        let zero_before_start = series.iter().all(|&(z, e)| e == 0.0 || z <= 0.0);
        return Ok(EnvelopeFit { eps, c1: 0.0, c2: 0.0, max_ratio: 0.0, within_envelope: zero_before_start });
    }
    let zs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|&(z, e)| (e / z).ln()).collect();
    let (b, log_a) = linear_fit(&zs, &ys).unwrap_or((0.0, ys.iter().sum::<f64>() / ys.len() as f64));
    let mut fit = EnvelopeFit { eps, c1: 2.0 * b, c2: 2.0 * log_a.exp() / eps, max_ratio: 0.0, within_envelope: false };
    let ratio = series
        .iter()
        .map(|&(z, e)| {
            if e == 0.0 {
                0.0
            } else if z <= 0.0 {
                // Nonzero error where the envelope vanishes.
                f64::MAX
            } else {
                e / fit.envelope(z)
            }
        })
        .fold(0.0, f64::max);
    fit.max_ratio = ratio;
    fit.within_envelope = ratio <= ENVELOPE_SLACK;
    Ok(fit)
}

fn within_spread(values: &[f64], tol: f64) -> bool {
    match median(values) {
        None => false,
        Some(0.0) => values.iter().all(|&v| v == 0.0),
        Some(m) => values.iter().all(|&v| (v - m).abs() <= tol * m.abs()),
    }
}

/// True when `C1` and `C2` of every fit lie within 25% of their medians.
pub fn envelope_constants_agree(fits: &[EnvelopeFit]) -> bool {
    let c1: Vec<f64> = fits.iter().map(|f| f.c1).collect();
    let c2: Vec<f64> = fits.iter().map(|f| f.c2).collect();
    !fits.is_empty() && within_spread(&c1, CONSTANT_SPREAD) && within_spread(&c2, CONSTANT_SPREAD)
}

/// Log-linear fit of a norm history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `log‖f‖` against the evolution variable.
    pub rate: f64,
    pub intercept: f64,
    /// Largest absolute deviation of `log‖f‖` from the line.
    pub residual: f64,
    /// `max − min` of `log‖f‖` over the fitted window.
    pub dynamic_range: f64,
    /// `rate < 0` and `residual ≤ 10%` of the dynamic range.
    pub passed: bool,
}

/// Fits `log norm` against evolution after discarding the first
/// `transient` fraction of the span.
pub fn decay_fit_series(series: &[(f64, f64)], transient: f64) -> Result<DecayFit> {
    if !(0.0..1.0).contains(&transient) {
        return Err(ExperimentError::InvalidInput("transient must lie in [0, 1)".into()));
    }
    if series.iter().any(|&(_, n)| !(n.is_finite() && n > 0.0)) {
        return Err(ExperimentError::InvalidInput("norms must be positive and finite".into()));
    }
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(ExperimentError::InvalidInput("empty norm history".into()));
    };
    let start = first.0 + transient * (last.0 - first.0);
    let window: Vec<(f64, f64)> = series.iter().copied().filter(|&(z, _)| z >= start - 1e-12).collect();
    if window.len() < 3 {
        return Err(ExperimentError::InvalidInput("a decay fit needs at least 3 samples after the transient".into()));
    }
    let zs: Vec<f64> = window.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
    let (rate, intercept) =
        linear_fit(&zs, &ys).ok_or_else(|| ExperimentError::InvalidInput("degenerate evolution values".into()))?;
    let residual = zs.iter().zip(&ys).map(|(z, y)| (y - intercept - rate * z).abs()).fold(0.0, f64::max);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let dynamic_range = hi - lo;
    let passed = rate < 0.0 && dynamic_range > 0.0 && residual <= 0.1 * dynamic_range;
    Ok(DecayFit { rate, intercept, residual, dynamic_range, passed })
}

/// Decay fit of the `H^order` norm of a viscous KZK or NPE trajectory.
pub fn decay_fit(traj: &[ModelState], coeff: &ModelCoefficients, order: u32, transient: f64) -> Result<DecayFit> {
    if !(coeff.nu > 0.0) {
        return Err(ExperimentError::InvalidInput("decay fits need a viscous (nu > 0) trajectory".into()));
    }
    if traj.iter().any(|s| !matches!(s.model, ModelKind::Kzk | ModelKind::Npe)) {
        return Err(ExperimentError::InvalidInput("decay fits apply to KZK or NPE trajectories".into()));
    }
    let series: Vec<(f64, f64)> = traj.iter().map(|s| (s.evol, sobolev_norm(&s.primary, order))).collect();
    decay_fit_series(&series, transient)
}
