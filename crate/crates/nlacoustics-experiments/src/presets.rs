//! Initial-condition presets and seeded perturbations.

use std::f64::consts::PI;

use nlacoustics::grid::{Field, Frame, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

/// Mach parameter of the water preset.
pub const WATER_EPS: f64 = 1e-5;

/// Named initial profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `A(sin κs + ½cos 2κs)·e^{−(y/w)²}`, a two-harmonic profile.
    TravellingWave,
    /// `−A e^{−(y/w)²} sin κs`.
    GaussianBeam,
    /// `−A (1 − (y/w)²)² sin κs` for `|y| ≤ w`, zero outside.
    PolynomialAmplitude,
    /// Gaussian beam at the Mach number of a strong ultrasound beam in water.
    Water,
}

fn one() -> f64 {
    1.0
}

/// A preset with its amplitude `A` and transverse width `w`; the axial
/// wavenumber is `κ = 2π/L` for the axial period `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub preset: Preset,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
}

/// `−e^{−y²} sin τ`.
pub fn gaussian_beam(tau: f64, y: f64) -> f64 {
    -(-y * y).exp() * tau.sin()
}

/// `−(1 − y²)² sin τ` for `|y| ≤ 1`, zero outside.
pub fn polynomial_amplitude(tau: f64, y: f64) -> f64 {
    if y.abs() <= 1.0 {
        -(1.0 - y * y).powi(2) * tau.sin()
    } else {
        0.0
    }
}

impl InitialCondition {
    pub fn new(preset: Preset) -> Self {
        InitialCondition { preset, amplitude: 1.0, width: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.width > 0.0 && self.width.is_finite()) {
            return Err(ExperimentError::Config("preset needs a finite amplitude and a positive width".into()));
        }
        Ok(())
    }

    /// Value at axial phase `θ = κs` and centred transverse coordinate `y`.
    pub fn value(&self, phase: f64, y: f64) -> f64 {
        let y = y / self.width;
        let a = self.amplitude;
        match self.preset {
            Preset::TravellingWave => a * (phase.sin() + 0.5 * (2.0 * phase).cos()) * (-y * y).exp(),
            Preset::GaussianBeam | Preset::Water => a * gaussian_beam(phase, y),
            Preset::PolynomialAmplitude => a * polynomial_amplitude(phase, y),
        }
    }

    /// Samples the profile on `grid`. The first axis carries the axial
    /// phase; the optional second axis is centred on its period midpoint and,
    /// in the physical frame, compressed to `y = √ε (x2 − L2/2)`.
    pub fn sample(&self, grid: &Grid, eps: f64) -> Result<Field> {
        let kappa = 2.0 * PI / grid.axis(0).length;
        let (centre, scale) = match grid.axes().get(1) {
            Some(ax) => (0.5 * ax.length, if grid.frame() == Frame::Physical { eps.sqrt() } else { 1.0 }),
            None => (0.0, 1.0),
        };
        Ok(Field::from_fn(grid.clone(), |x| {
            let y = x.get(1).map_or(0.0, |&t| scale * (t - centre));
            self.value(kappa * x[0], y)
        })?)
    }
}

/// `components` fixed-seed band-limited random fields, jointly rescaled to
/// combined L² norm `delta`. Only modes with axial index in `1..=N/8` (and
/// transverse index up to `N/8`) are excited, so each field has zero mean
/// along the first axis.
pub fn band_limited_perturbation(grid: &Grid, components: usize, delta: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(ExperimentError::InvalidInput(format!("perturbation size must be >= 0, got {delta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axial_max = (grid.axis(0).points / 8).max(1);
    let trans_max = grid.axes().get(1).map_or(0, |a| a.points / 8);
    let k0 = 2.0 * PI / grid.axis(0).length;
    let k1 = grid.axes().get(1).map_or(0.0, |a| 2.0 * PI / a.length);
    let mut out = Vec::with_capacity(components);
    for _ in 0..components {
        let mut modes = Vec::new();
        for i in 1..=axial_max {
            for j in -(trans_max as i64)..=(trans_max as i64) {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                modes.push((i as f64 * k0, j as f64 * k1, a, b));
            }
        }
        out.push(grid.sample(|x| {
            let y = x.get(1).copied().unwrap_or(0.0);
            modes
                .iter()
                .map(|&(p, q, a, b)| {
                    let th = p * x[0] + q * y;
                    a * th.cos() + b * th.sin()
                })
                .sum()
        }));
    }
    let norm = out.iter().map(|v| nlacoustics::grid::l2_norm(grid, v).powi(2)).sum::<f64>().sqrt();
    let scale = if norm > 0.0 { delta / norm } else { 0.0 };
    for v in &mut out {
        v.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(out)
}
