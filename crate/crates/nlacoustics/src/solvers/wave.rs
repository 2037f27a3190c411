//! Kuznetsov and Westervelt equations as first-order systems in `(u, ∂t u)`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::engine::{expm2, march, PropagatorCache, Semilinear, State, StepControl};
use super::{ModelKind, ModelState, Trajectory};
use crate::coefficients::ModelCoefficients;
use crate::error::{Error, Result};
use crate::grid::{Field, Frame, Grid};
use crate::spectral::Spectral;

/// Smallest admissible value of the factor multiplying `∂t w` (shared with the
/// Westervelt initial-data map).
pub const MIN_TIME_FACTOR: f64 = 0.5;

/// Independent switches for the Kuznetsov ε-terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KuznetsovSwitches {
    /// `ε α ∂t u ∂t² u`.
    pub time_nonlinearity: bool,
    /// `ε ∂t (∇u)²`.
    pub gradient_nonlinearity: bool,
    /// `ε (ν/ρ0) Δ ∂t u`.
    pub viscosity: bool,
}

impl Default for KuznetsovSwitches {
    fn default() -> Self {
        KuznetsovSwitches { time_nonlinearity: true, gradient_nonlinearity: true, viscosity: true }
    }
}

impl KuznetsovSwitches {
    /// Linear, inviscid wave equation.
    pub fn linear() -> Self {
        KuznetsovSwitches { time_nonlinearity: false, gradient_nonlinearity: false, viscosity: false }
    }
}

/// Switches for the Westervelt ε-terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WesterveltSwitches {
    pub nonlinearity: bool,
    pub viscosity: bool,
}

impl Default for WesterveltSwitches {
    fn default() -> Self {
        WesterveltSwitches { nonlinearity: true, viscosity: true }
    }
}

#[derive(Clone, Copy)]
enum Nonlinearity {
    Kuznetsov(KuznetsovSwitches),
    Westervelt(WesterveltSwitches),
}

struct WaveSystem {
    sp: Spectral,
    axes: Vec<usize>,
    k2: Vec<f64>,
    c2: f64,
    /// Coefficient of `Δ ∂t u` (zero when viscosity is off).
    damping: f64,
    coeff: ModelCoefficients,
    kind: Nonlinearity,
    cache: PropagatorCache<[Complex64; 4]>,
}

fn check_wave_grid(grid: &Grid) -> Result<()> {
    if grid.frame() != Frame::Physical {
        return Err(Error::InvalidGrid("wave models need a physical-frame grid".into()));
    }
    if let Some(a) = grid.axes().iter().find(|a| !a.periodic) {
        return Err(Error::NonPeriodicAxis(a.name.clone()));
    }
    Ok(())
}

impl WaveSystem {
    fn new(coeff: &ModelCoefficients, grid: &Grid, kind: Nonlinearity) -> Result<Self> {
        coeff.validate()?;
        check_wave_grid(grid)?;
        let sp = Spectral::new(grid);
        let axes: Vec<usize> = (0..grid.ndim()).collect();
        let k2 = (0..grid.len())
            .map(|p| {
                let idx = grid.unravel(p);
                axes.iter().map(|&a| sp.wavenumber(a, idx[a]).powi(2)).sum()
            })
            .collect();
        let viscous = match kind {
            Nonlinearity::Kuznetsov(s) => s.viscosity,
            Nonlinearity::Westervelt(s) => s.viscosity,
        };
        let damping = if viscous { coeff.eps * coeff.nu / coeff.rho0 } else { 0.0 };
        Ok(WaveSystem { sp, axes, k2, c2: coeff.c * coeff.c, damping, coeff: *coeff, kind, cache: Default::default() })
    }

    /// Linear part `c²Δu + damping·Δw`.
    fn linear_rhs(&self, u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let lu = self.sp.laplacian(u, &self.axes)?;
        let mut out: Vec<f64> = lu.iter().map(|v| self.c2 * v).collect();
        if self.damping != 0.0 {
            let lw = self.sp.laplacian(w, &self.axes)?;
            for (o, v) in out.iter_mut().zip(lw) {
                *o += self.damping * v;
            }
        }
        Ok(out)
    }

    /// Full `∂t w` and the linear part, sharing the Laplacians.
    fn acceleration(&self, u: &[f64], w: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let lin = self.linear_rhs(u, w)?;
        let eps = self.coeff.eps;
        let (q, extra): (Vec<f64>, Vec<f64>) = match self.kind {
            Nonlinearity::Kuznetsov(s) => {
                let alpha = self.coeff.alpha();
                let q =
                    if s.time_nonlinearity { w.iter().map(|v| eps * alpha * v).collect() } else { vec![0.0; w.len()] };
                let mut g = vec![0.0; w.len()];
                if s.gradient_nonlinearity {
                    for &a in &self.axes {
                        let du = self.sp.derivative(u, a, 1)?;
                        let dw = self.sp.derivative(w, a, 1)?;
                        for ((gi, x), y) in g.iter_mut().zip(du).zip(dw) {
                            *gi += self.coeff.beta_nl() * eps * x * y;
                        }
                    }
                }
                (q, g)
            }
            Nonlinearity::Westervelt(s) => {
                let beta = (self.coeff.gamma + 1.0) / self.c2;
                let q = if s.nonlinearity { w.iter().map(|v| eps * beta * v).collect() } else { vec![0.0; w.len()] };
                (q, vec![0.0; w.len()])
            }
        };
        let mut full = Vec::with_capacity(w.len());
        for i in 0..w.len() {
            let factor = 1.0 - q[i];
            if factor < MIN_TIME_FACTOR {
                return Err(Error::Degenerate { factor, threshold: MIN_TIME_FACTOR });
            }
            full.push((lin[i] + extra[i]) / factor);
        }
        Ok((full, lin))
    }
}

impl Semilinear for WaveSystem {
    fn propagate(&self, s: &State, dt: f64) -> Result<State> {
        let table = self.cache.get(dt, || {
            self.k2
                .iter()
                .map(|&k2| {
                    let m = [
                        Complex64::new(0.0, 0.0),
                        Complex64::new(1.0, 0.0),
                        Complex64::new(-self.c2 * k2, 0.0),
                        Complex64::new(-self.damping * k2, 0.0),
                    ];
                    expm2(m, dt)
                })
                .collect()
        });
        let mut a = self.sp.forward(&s[0]);
        let mut b = self.sp.forward(&s[1]);
        for (p, e) in table.iter().enumerate() {
            let (x, y) = (a[p], b[p]);
            a[p] = e[0] * x + e[1] * y;
            b[p] = e[2] * x + e[3] * y;
        }
        Ok(vec![self.sp.inverse(a), self.sp.inverse(b)])
    }

    fn nonlinear(&self, s: &State, _t: f64) -> Result<State> {
        let (full, lin) = self.acceleration(&s[0], &s[1])?;
        let diff: Vec<f64> = full.iter().zip(&lin).map(|(f, l)| f - l).collect();
        Ok(vec![vec![0.0; diff.len()], self.sp.dealias(&diff)])
    }
}

fn run_wave(
    sys: WaveSystem,
    model: ModelKind,
    u0: &Field,
    u1: &Field,
    t_end: f64,
    ctl: &StepControl,
) -> Result<Trajectory> {
    u0.ensure_compatible(u1)?;
    if u0.components() != 1 {
        return Err(Error::InvalidInput("wave data must be scalar".into()));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("end time must be >= 0, got {t_end}")));
    }
    let grid = u0.grid().clone();
    let mut traj = Vec::new();
    march(&sys, vec![u0.values().to_vec(), u1.values().to_vec()], 0.0, t_end, ctl, |t, s| {
        traj.push(ModelState {
            model,
            evol: t,
            primary: Field::scalar(grid.clone(), s[0].clone())?,
            velocity: Some(Field::scalar(grid.clone(), s[1].clone())?),
        });
        Ok(())
    })?;
    Ok(traj)
}

/// Integrates `∂t²u − c²Δu = ε∂t((∇u)² + (γ−1)/(2c²)(∂t u)² + (ν/ρ0)Δu)` from
/// `(u, ∂t u) = (u0, u1)` at `t = 0` to `t_end`.
pub fn solve_kuznetsov(
    coeff: &ModelCoefficients,
    u0: &Field,
    u1: &Field,
    t_end: f64,
    ctl: &StepControl,
    switches: KuznetsovSwitches,
) -> Result<Trajectory> {
    let sys = WaveSystem::new(coeff, u0.grid(), Nonlinearity::Kuznetsov(switches))?;
    run_wave(sys, ModelKind::Kuznetsov, u0, u1, t_end, ctl)
}

/// Integrates `∂t²Π − c²ΔΠ = ε∂t((ν/ρ0)ΔΠ + (γ+1)/(2c²)(∂t Π)²)`.
pub fn solve_westervelt(
    coeff: &ModelCoefficients,
    pi0: &Field,
    pi1: &Field,
    t_end: f64,
    ctl: &StepControl,
    switches: WesterveltSwitches,
) -> Result<Trajectory> {
    let sys = WaveSystem::new(coeff, pi0.grid(), Nonlinearity::Westervelt(switches))?;
    run_wave(sys, ModelKind::Westervelt, pi0, pi1, t_end, ctl)
}

fn acceleration_field(sys: WaveSystem, u: &Field, w: &Field) -> Result<Field> {
    u.ensure_compatible(w)?;
    let (full, _) = sys.acceleration(u.values(), w.values())?;
    Field::scalar(u.grid().clone(), full)
}

/// `∂t²u` implied by the Kuznetsov equation at a state `(u, ∂t u)`.
pub fn kuznetsov_acceleration(
    coeff: &ModelCoefficients,
    switches: KuznetsovSwitches,
    u: &Field,
    ut: &Field,
) -> Result<Field> {
    acceleration_field(WaveSystem::new(coeff, u.grid(), Nonlinearity::Kuznetsov(switches))?, u, ut)
}

/// `∂t²Π` implied by the Westervelt equation at a state `(Π, ∂t Π)`.
pub fn westervelt_acceleration(
    coeff: &ModelCoefficients,
    switches: WesterveltSwitches,
    pi: &Field,
    pit: &Field,
) -> Result<Field> {
    acceleration_field(WaveSystem::new(coeff, pi.grid(), Nonlinearity::Westervelt(switches))?, pi, pit)
}
