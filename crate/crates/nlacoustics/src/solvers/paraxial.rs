//! KZK (marching in `z`) and NPE (marching in `τ`) equations.
//!
//! Both act on a grid whose first axis is the periodic, mean-zero axis (`τ`
//! for KZK, `z` for NPE) and whose remaining axes are periodic transverse
//! coordinates.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::engine::{march, Semilinear, State, StepControl};
use super::{ModelKind, ModelState, Trajectory};
use crate::coefficients::ModelCoefficients;
use crate::error::{Error, Result};
use crate::grid::{l2_norm, Field, Frame, Grid};
use crate::spectral::{Spectral, MEAN_TOLERANCE};

/// Discrete form of the quadratic nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearForm {
    /// `∂(f²)`, dealiased.
    #[default]
    Conservative,
    /// `2f ∂f`, dealiased.
    Product,
}

/// Term switches shared by the KZK and NPE solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParaxialOptions {
    #[serde(default = "yes")]
    pub nonlinearity: bool,
    #[serde(default = "yes")]
    pub diffraction: bool,
    #[serde(default = "yes")]
    pub viscosity: bool,
    #[serde(default)]
    pub nonlinear_form: NonlinearForm,
}

fn yes() -> bool {
    true
}

impl Default for ParaxialOptions {
    fn default() -> Self {
        ParaxialOptions {
            nonlinearity: true,
            diffraction: true,
            viscosity: true,
            nonlinear_form: NonlinearForm::Conservative,
        }
    }
}

pub type KzkOptions = ParaxialOptions;
pub type NpeOptions = ParaxialOptions;

/// Optional KZK forcing `S(z, I)`; the solver adds `ε ρ0/(2c²)·S` to the
/// right-hand side of `c ∂z I = …`.
pub type KzkSource<'a> = dyn Fn(f64, &Field) -> Result<Field> + 'a;

/// Coefficients of `∂s f = nl·∂(f²) + visc·∂²f + diff·Δ_⊥ ∂⁻¹ f`.
#[derive(Debug, Clone, Copy)]
struct Rates {
    nl: f64,
    visc: f64,
    diff: f64,
}

fn kzk_rates(m: &ModelCoefficients, o: &ParaxialOptions) -> Rates {
    let c = m.c;
    Rates {
        nl: if o.nonlinearity { (m.gamma + 1.0) / (4.0 * m.rho0 * c) } else { 0.0 },
        visc: if o.viscosity { m.nu / (2.0 * c * c * c * m.rho0) } else { 0.0 },
        diff: if o.diffraction { 0.5 * c } else { 0.0 },
    }
}

fn npe_rates(m: &ModelCoefficients, o: &ParaxialOptions) -> Rates {
    Rates {
        nl: if o.nonlinearity { -(m.gamma + 1.0) * m.c / (4.0 * m.rho0) } else { 0.0 },
        visc: if o.viscosity { m.nu / (2.0 * m.rho0) } else { 0.0 },
        diff: if o.diffraction { -0.5 * m.c } else { 0.0 },
    }
}

struct Paraxial<'a> {
    sp: Spectral,
    transverse: Vec<usize>,
    rates: Rates,
    form: NonlinearForm,
    source: Option<(&'a KzkSource<'a>, f64)>,
}

fn check_paraxial_grid(grid: &Grid, frame: Frame) -> Result<()> {
    if grid.frame() != frame {
        return Err(Error::InvalidGrid(format!("expected a {}-frame grid", frame.tag())));
    }
    if let Some(a) = grid.axes().iter().find(|a| !a.periodic) {
        return Err(Error::NonPeriodicAxis(a.name.clone()));
    }
    Ok(())
}

impl<'a> Paraxial<'a> {
    fn new(grid: &Grid, rates: Rates, form: NonlinearForm) -> Self {
        Paraxial { sp: Spectral::new(grid), transverse: (1..grid.ndim()).collect(), rates, form, source: None }
    }

    /// `nl·∂(f²) + diff·Δ_⊥∂⁻¹f` (the explicit terms).
    fn explicit(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; f.len()];
        if self.rates.nl != 0.0 {
            let q = match self.form {
                NonlinearForm::Conservative => {
                    let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
                    self.sp.derivative(&sq, 0, 1)?
                }
                NonlinearForm::Product => {
                    let d = self.sp.derivative(f, 0, 1)?;
                    f.iter().zip(d).map(|(a, b)| 2.0 * a * b).collect()
                }
            };
            for (o, v) in out.iter_mut().zip(self.sp.dealias(&q)) {
                *o += self.rates.nl * v;
            }
        }
        if self.rates.diff != 0.0 && !self.transverse.is_empty() {
            let anti = self.sp.antiderivative_unchecked(f, 0)?;
            let lap = self.sp.laplacian(&anti, &self.transverse)?;
            for (o, v) in out.iter_mut().zip(lap) {
                *o += self.rates.diff * v;
            }
        }
        Ok(out)
    }

    fn viscous(&self, f: &[f64]) -> Result<Vec<f64>> {
        let d2 = self.sp.derivative(f, 0, 2)?;
        Ok(d2.iter().map(|v| self.rates.visc * v).collect())
    }

    /// Full right-hand side without the source.
    fn rhs(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.explicit(f)?;
        if self.rates.visc != 0.0 {
            for (o, v) in out.iter_mut().zip(self.viscous(f)?) {
                *o += v;
            }
        }
        Ok(out)
    }
}

impl Semilinear for Paraxial<'_> {
    fn propagate(&self, s: &State, dt: f64) -> Result<State> {
        if self.rates.visc == 0.0 {
            return Ok(s.clone());
        }
        let rate = self.rates.visc;
        Ok(vec![self.sp.apply_multiplier(&s[0], &[0], |idx| {
            let k = self.sp.wavenumber(0, idx[0]);
            Complex64::new((-rate * k * k * dt).exp(), 0.0)
        })])
    }

    fn nonlinear(&self, s: &State, evol: f64) -> Result<State> {
        let mut out = self.explicit(&s[0])?;
        if let Some((src, scale)) = self.source {
            let grid = self.sp.grid().clone();
            let f = src(evol, &Field::scalar(grid.clone(), s[0].clone())?)?;
            if f.grid() != &grid || f.components() != 1 {
                return Err(Error::GridMismatch("source field must live on the solver grid".into()));
            }
            for (o, v) in out.iter_mut().zip(f.values()) {
                *o += scale * v;
            }
        }
        Ok(vec![out])
    }

    fn finish_step(&self, u: &mut State) -> Result<()> {
        u[0] = self.sp.project_mean_zero(&u[0], 0)?;
        Ok(())
    }
}

fn check_mean_zero(sp: &Spectral, f: &Field) -> Result<()> {
    let v = f.values();
    let tol = MEAN_TOLERANCE * l2_norm(f.grid(), v);
    let mean = sp.max_line_mean(v, 0);
    if mean > tol {
        return Err(Error::NonZeroMean { axis: f.grid().axis(0).name.clone(), mean, tol });
    }
    Ok(())
}

fn run(sys: &Paraxial, model: ModelKind, f0: &Field, end: f64, ctl: &StepControl) -> Result<Trajectory> {
    if f0.components() != 1 {
        return Err(Error::InvalidInput("paraxial data must be scalar".into()));
    }
    if !(end >= 0.0 && end.is_finite()) {
        return Err(Error::InvalidInput(format!("march length must be >= 0, got {end}")));
    }
    check_mean_zero(&sys.sp, f0)?;
    let grid = f0.grid().clone();
    let mut traj = Vec::new();
    march(sys, vec![f0.values().to_vec()], 0.0, end, ctl, |s, u| {
        traj.push(ModelState { model, evol: s, primary: Field::scalar(grid.clone(), u[0].clone())?, velocity: None });
        Ok(())
    })?;
    Ok(traj)
}

/// Marches `c∂zI = (γ+1)/(4ρ0)∂τ(I²) + ν/(2c²ρ0)∂τ²I + (c²/2)Δ_y∂τ⁻¹I (+ ε ρ0/(2c²) S)`
/// from `I(z=0) = i0` to `z_end`. `i0` must have zero mean along `τ`
/// (the first axis); the mean is re-projected to zero after every step.
pub fn solve_kzk(
    coeff: &ModelCoefficients,
    i0: &Field,
    z_end: f64,
    ctl: &StepControl,
    options: KzkOptions,
    source: Option<&KzkSource<'_>>,
) -> Result<Trajectory> {
    coeff.validate()?;
    check_paraxial_grid(i0.grid(), Frame::Kzk)?;
    let mut sys = Paraxial::new(i0.grid(), kzk_rates(coeff, &options), options.nonlinear_form);
    let scale = coeff.eps * coeff.rho0 / (2.0 * coeff.c.powi(3));
    sys.source = source.map(|s| (s, scale));
    run(&sys, ModelKind::Kzk, i0, z_end, ctl)
}

/// Marches `∂τξ = −(γ+1)c/(4ρ0)∂z(ξ²) + ν/(2ρ0)∂z²ξ − (c/2)Δ_y∂z⁻¹ξ` from
/// `ξ(τ=0) = xi0` to `tau_end`; `xi0` must have zero mean along `z`.
pub fn solve_npe(
    coeff: &ModelCoefficients,
    xi0: &Field,
    tau_end: f64,
    ctl: &StepControl,
    options: NpeOptions,
) -> Result<Trajectory> {
    coeff.validate()?;
    check_paraxial_grid(xi0.grid(), Frame::Npe)?;
    let sys = Paraxial::new(xi0.grid(), npe_rates(coeff, &options), options.nonlinear_form);
    run(&sys, ModelKind::Npe, xi0, tau_end, ctl)
}

/// `∂z I` given by the KZK equation (no source).
pub fn kzk_rhs(coeff: &ModelCoefficients, options: KzkOptions, i: &Field) -> Result<Field> {
    check_paraxial_grid(i.grid(), Frame::Kzk)?;
    let sys = Paraxial::new(i.grid(), kzk_rates(coeff, &options), options.nonlinear_form);
    Field::scalar(i.grid().clone(), sys.rhs(i.values())?)
}

/// Directional derivative of [`kzk_rhs`] at `i` along `j`:
/// `(1/c)[(γ+1)/(2ρ0)∂τ(IJ) + ν/(2c²ρ0)∂τ²J + (c²/2)Δ_y∂τ⁻¹J]`.
pub fn kzk_rhs_linearized(coeff: &ModelCoefficients, options: KzkOptions, i: &Field, j: &Field) -> Result<Field> {
    i.ensure_compatible(j)?;
    check_paraxial_grid(i.grid(), Frame::Kzk)?;
    let rates = kzk_rates(coeff, &options);
    let sys = Paraxial::new(i.grid(), Rates { nl: 0.0, ..rates }, options.nonlinear_form);
    let mut out = sys.rhs(j.values())?;
    if rates.nl != 0.0 {
        let prod: Vec<f64> = i.values().iter().zip(j.values()).map(|(a, b)| a * b).collect();
        let d = sys.sp.derivative(&prod, 0, 1)?;
        for (o, v) in out.iter_mut().zip(d) {
            *o += 2.0 * rates.nl * v;
        }
    }
    Field::scalar(i.grid().clone(), out)
}

/// `∂τ ξ` given by the NPE equation.
pub fn npe_rhs(coeff: &ModelCoefficients, options: NpeOptions, xi: &Field) -> Result<Field> {
    check_paraxial_grid(xi.grid(), Frame::Npe)?;
    let sys = Paraxial::new(xi.grid(), npe_rates(coeff, &options), options.nonlinear_form);
    Field::scalar(xi.grid().clone(), sys.rhs(xi.values())?)
}

/// Evolution derivatives `[f, ∂f, …, ∂ᵏf]` of a KZK (`∂z I`) or NPE (`∂τ ξ`)
/// solution at one state, obtained by differentiating the equation
/// (its right-hand side is quadratic, so the recurrence is exact).
pub fn paraxial_jet(
    coeff: &ModelCoefficients,
    frame: Frame,
    options: ParaxialOptions,
    f: &Field,
    order: usize,
) -> Result<Vec<Field>> {
    check_paraxial_grid(f.grid(), frame)?;
    let rates = match frame {
        Frame::Kzk => kzk_rates(coeff, &options),
        Frame::Npe => npe_rates(coeff, &options),
        Frame::Physical => return Err(Error::InvalidGrid("paraxial jets need a KZK or NPE grid".into())),
    };
    let sys = Paraxial::new(f.grid(), Rates { nl: 0.0, ..rates }, NonlinearForm::Conservative);
    let mut jet = vec![f.values().to_vec()];
    for k in 0..order {
        let mut next = sys.rhs(&jet[k])?;
        if rates.nl != 0.0 {
            let mut prod = vec![0.0; f.values().len()];
            for j in 0..=k {
                let w = (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64);
                for ((o, a), b) in prod.iter_mut().zip(&jet[j]).zip(&jet[k - j]) {
                    *o += w * a * b;
                }
            }
            for (o, v) in next.iter_mut().zip(sys.sp.derivative(&prod, 0, 1)?) {
                *o += rates.nl * v;
            }
        }
        jet.push(next);
    }
    jet.into_iter().map(|v| Field::scalar(f.grid().clone(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use std::f64::consts::PI;

    fn kzk_grid() -> Grid {
        Grid::new(vec![Axis::periodic("tau", 2.0 * PI, 32), Axis::periodic("y", 16.0, 32)], Frame::Kzk).unwrap()
    }

    #[test]
    fn rejects_nonzero_mean() {
        let m = ModelCoefficients::new(1.0, 1.0, 1.4, 0.1, 0.1).unwrap();
        let i0 = Field::from_fn(kzk_grid(), |x| 1.0 + x[0].sin()).unwrap();
        let r = solve_kzk(&m, &i0, 0.1, &StepControl::new(0.01), Default::default(), None);
        assert!(matches!(r, Err(Error::NonZeroMean { .. })));
    }

    #[test]
    fn wrong_frame_rejected() {
        let m = ModelCoefficients::new(1.0, 1.0, 1.4, 0.1, 0.1).unwrap();
        let i0 = Field::zeros(kzk_grid(), 1);
        assert!(solve_npe(&m, &i0, 0.1, &StepControl::new(0.01), Default::default()).is_err());
    }

    #[test]
    fn source_scaling_enters_linearly() {
        let m = ModelCoefficients::new(1.0, 2.0, 1.4, 0.0, 0.1).unwrap();
        let g = kzk_grid();
        let i0 = Field::zeros(g.clone(), 1);
        let s = Field::from_fn(g.clone(), |x| x[0].cos()).unwrap();
        let src = |_z: f64, _i: &Field| Ok(s.clone());
        let opts = KzkOptions { nonlinearity: false, diffraction: false, viscosity: false, ..Default::default() };
        let tr = solve_kzk(&m, &i0, 0.5, &StepControl::new(0.1), opts, Some(&src)).unwrap();
        let expect = 0.5 * m.eps * m.rho0 / 2.0;
        let got = tr.last().unwrap().primary.values()[0];
        assert!((got - expect).abs() < 1e-14, "{got} vs {expect}");
    }
}
