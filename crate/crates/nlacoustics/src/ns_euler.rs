//! Isentropic compressible Navier–Stokes (ν > 0) / Euler (ν = 0) on periodic
//! grids with the quadratic state law, plus the convex entropy pair.
//!
//! Mass is advanced in flux form, momentum in velocity form; the linear
//! acoustic block `(ρ − ρ0, longitudinal v)` and the `ρ0`-scaled viscous term
//! are propagated exactly per Fourier mode.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::ModelCoefficients;
use crate::error::{Error, Result};
use crate::grid::{integrate, Field, Frame, Grid};
use crate::solvers::engine::{expm2, march, PropagatorCache, Semilinear, State, StepControl};
use crate::spectral::Spectral;

/// Density and momentum `(ρ, ρv)` on a physical-frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub rho: Field,
    /// One component per grid axis.
    pub momentum: Field,
}

/// One trajectory sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSnapshot {
    pub t: f64,
    pub state: FlowState,
}

/// Parameters of the state law beyond [`ModelCoefficients`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateLaw {
    /// Reference pressure `p0` (only its gradient enters the dynamics).
    #[serde(default)]
    pub p0: f64,
}

impl Default for StateLaw {
    fn default() -> Self {
        StateLaw { p0: 0.0 }
    }
}

/// `κ = (γ − 1)c²/(2ρ0)`, the curvature of the state law.
pub fn pressure_curvature(m: &ModelCoefficients) -> f64 {
    (m.gamma - 1.0) * m.c * m.c / (2.0 * m.rho0)
}

/// `p(ρ) = p0 + c²(ρ − ρ0) + κ(ρ − ρ0)²`.
pub fn pressure_at(m: &ModelCoefficients, law: StateLaw, rho: f64) -> f64 {
    let d = rho - m.rho0;
    law.p0 + m.c * m.c * d + pressure_curvature(m) * d * d
}

/// `p′(ρ) = c² + 2κ(ρ − ρ0)`.
pub fn pressure_slope(m: &ModelCoefficients, rho: f64) -> f64 {
    m.c * m.c + 2.0 * pressure_curvature(m) * (rho - m.rho0)
}

fn min_value(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn check_positive(rho: &[f64], t: f64) -> Result<()> {
    let min = min_value(rho);
    if min.is_nan() || min <= 0.0 {
        return Err(Error::NonPositiveDensity { min, evol: t });
    }
    Ok(())
}

/// Pointwise pressure of a density field.
pub fn pressure(m: &ModelCoefficients, law: StateLaw, rho: &Field) -> Result<Field> {
    check_positive(rho.values(), f64::NAN)?;
    Field::scalar(rho.grid().clone(), rho.values().iter().map(|&r| pressure_at(m, law, r)).collect())
}

impl FlowState {
    /// Validates grids, component counts and positivity.
    pub fn new(rho: Field, momentum: Field) -> Result<Self> {
        if rho.grid() != momentum.grid() {
            return Err(Error::GridMismatch("density and momentum grids differ".into()));
        }
        if rho.grid().frame() != Frame::Physical {
            return Err(Error::InvalidGrid("flow states live on a physical-frame grid".into()));
        }
        if rho.components() != 1 || momentum.components() != rho.grid().ndim() {
            return Err(Error::InvalidInput("expected scalar density and one momentum component per axis".into()));
        }
        check_positive(rho.values(), f64::NAN)?;
        Ok(FlowState { rho, momentum })
    }

    /// The constant state `(ρ0, 0)`.
    pub fn constant(grid: &Grid, rho0: f64) -> Result<Self> {
        FlowState::new(Field::scalar(grid.clone(), vec![rho0; grid.len()])?, Field::zeros(grid.clone(), grid.ndim()))
    }

    /// Builds `(ρ, ρv)` from density and velocity components.
    pub fn from_velocity(rho: Field, velocity: &[Vec<f64>]) -> Result<Self> {
        let m: Vec<Vec<f64>> =
            velocity.iter().map(|v| v.iter().zip(rho.values()).map(|(a, r)| a * r).collect()).collect();
        let mom = Field::from_components(rho.grid().clone(), &m)?;
        FlowState::new(rho, mom)
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    /// Velocity components `m_i/ρ`.
    pub fn velocity(&self) -> Vec<Vec<f64>> {
        self.momentum
            .split_components()
            .into_iter()
            .map(|m| m.iter().zip(self.rho.values()).map(|(a, r)| a / r).collect())
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        integrate(self.grid(), self.rho.values())
    }

    pub fn total_momentum(&self) -> Vec<f64> {
        self.momentum.split_components().iter().map(|m| integrate(self.grid(), m)).collect()
    }
}

/// Flux `G_i(U) = (ρv_i, ρv_i v + p e_i)` along axis `axis` (1 + n components).
pub fn flux(m: &ModelCoefficients, law: StateLaw, u: &FlowState, axis: usize) -> Result<Field> {
    let n = u.grid().ndim();
    if axis >= n {
        return Err(Error::UnknownAxis(format!("#{axis}")));
    }
    let p = pressure(m, law, &u.rho)?;
    let v = u.velocity();
    let mi = u.momentum.component(axis);
    let mut comps = vec![mi.clone()];
    for (j, vj) in v.iter().enumerate() {
        let mut c: Vec<f64> = mi.iter().zip(vj).map(|(a, b)| a * b).collect();
        if j == axis {
            for (x, q) in c.iter_mut().zip(p.values()) {
                *x += q;
            }
        }
        comps.push(c);
    }
    Field::from_components(u.grid().clone(), &comps)
}

struct FlowSystem {
    sp: Spectral,
    coeff: ModelCoefficients,
    ndim: usize,
    /// Wavevector with odd-symbol Nyquist entries removed, per point.
    kvec: Vec<Vec<f64>>,
    k2: Vec<f64>,
    visc: f64,
    cache: PropagatorCache<[Complex64; 4]>,
}

impl FlowSystem {
    fn new(coeff: &ModelCoefficients, grid: &Grid) -> Result<Self> {
        coeff.validate()?;
        if grid.frame() != Frame::Physical {
            return Err(Error::InvalidGrid("flow solver needs a physical-frame grid".into()));
        }
        if let Some(a) = grid.axes().iter().find(|a| !a.periodic) {
            return Err(Error::NonPeriodicAxis(a.name.clone()));
        }
        let sp = Spectral::new(grid);
        let ndim = grid.ndim();
        let mut kvec = Vec::with_capacity(grid.len());
        let mut k2 = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            let idx = grid.unravel(p);
            let k: Vec<f64> =
                (0..ndim).map(|a| if sp.is_nyquist(a, idx[a]) { 0.0 } else { sp.wavenumber(a, idx[a]) }).collect();
            k2.push((0..ndim).map(|a| sp.wavenumber(a, idx[a]).powi(2)).sum());
            kvec.push(k);
        }
        Ok(FlowSystem {
            sp,
            coeff: *coeff,
            ndim,
            kvec,
            k2,
            visc: coeff.eps * coeff.nu / coeff.rho0,
            cache: Default::default(),
        })
    }

    fn grad(&self, f: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..self.ndim).map(|a| self.sp.derivative(f, a, 1)).collect()
    }

    /// Full `(∂t ρ', ∂t v)` in primitive variables, undealiased.
    fn tendencies(&self, s: &State) -> Result<State> {
        let m = &self.coeff;
        let n = self.ndim;
        let rho: Vec<f64> = s[0].iter().map(|d| m.rho0 + d).collect();
        let v = &s[1..];
        let mut rho_t = vec![0.0; rho.len()];
        for a in 0..n {
            let flux: Vec<f64> = rho.iter().zip(&v[a]).map(|(r, x)| r * x).collect();
            for (o, d) in rho_t.iter_mut().zip(self.sp.derivative(&flux, a, 1)?) {
                *o -= d;
            }
        }
        let p: Vec<f64> = rho.iter().map(|&r| pressure_at(m, StateLaw::default(), r)).collect();
        let grad_p = self.grad(&p)?;
        let mut out = vec![rho_t];
        let grads: Vec<Vec<Vec<f64>>> = v.iter().map(|vi| self.grad(vi)).collect::<Result<_>>()?;
        let axes: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let lap = self.sp.laplacian(&v[i], &axes)?;
            let mut vt = vec![0.0; rho.len()];
            for (pt, o) in vt.iter_mut().enumerate() {
                let adv: f64 = (0..n).map(|j| v[j][pt] * grads[i][j][pt]).sum();
                *o = -adv - grad_p[i][pt] / rho[pt] + self.coeff.eps * self.coeff.nu * lap[pt] / rho[pt];
            }
            out.push(vt);
        }
        Ok(out)
    }

    /// Linear acoustic tendencies subtracted from the full ones.
    fn linear_tendencies(&self, s: &State) -> Result<State> {
        let m = &self.coeff;
        let n = self.ndim;
        let mut div = vec![0.0; s[0].len()];
        for a in 0..n {
            for (o, d) in div.iter_mut().zip(self.sp.derivative(&s[1 + a], a, 1)?) {
                *o += d;
            }
        }
        let mut out = vec![div.iter().map(|d| -m.rho0 * d).collect::<Vec<f64>>()];
        let grad = self.grad(&s[0])?;
        let axes: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let lap = self.sp.laplacian(&s[1 + i], &axes)?;
            out.push(grad[i].iter().zip(lap).map(|(g, l)| -m.c * m.c / m.rho0 * g + self.visc * l).collect());
        }
        Ok(out)
    }
}

impl Semilinear for FlowSystem {
    fn propagate(&self, s: &State, dt: f64) -> Result<State> {
        let m = self.coeff;
        let table = self.cache.get(dt, || {
            self.kvec
                .iter()
                .zip(&self.k2)
                .map(|(k, &k2)| {
                    let kabs = k.iter().map(|x| x * x).sum::<f64>().sqrt();
                    expm2(
                        [
                            Complex64::new(0.0, 0.0),
                            Complex64::new(0.0, -m.rho0 * kabs),
                            Complex64::new(0.0, -m.c * m.c / m.rho0 * kabs),
                            Complex64::new(-self.visc * k2, 0.0),
                        ],
                        dt,
                    )
                })
                .collect()
        });
        let mut r = self.sp.forward(&s[0]);
        let mut v: Vec<Vec<Complex64>> = s[1..].iter().map(|c| self.sp.forward(c)).collect();
        for p in 0..r.len() {
            let k = &self.kvec[p];
            let kabs = k.iter().map(|x| x * x).sum::<f64>().sqrt();
            let e = &table[p];
            let decay = (-self.visc * self.k2[p] * dt).exp();
            if kabs == 0.0 {
                for vi in v.iter_mut() {
                    vi[p] *= decay;
                }
                r[p] *= e[0];
                continue;
            }
            let vl: Complex64 = (0..self.ndim).map(|a| v[a][p] * (k[a] / kabs)).sum();
            let (r_new, vl_new) = (e[0] * r[p] + e[1] * vl, e[2] * r[p] + e[3] * vl);
            for a in 0..self.ndim {
                let dir = k[a] / kabs;
                let transverse = v[a][p] - vl * dir;
                v[a][p] = transverse * decay + vl_new * dir;
            }
            r[p] = r_new;
        }
        let mut out = vec![self.sp.inverse(r)];
        out.extend(v.into_iter().map(|c| self.sp.inverse(c)));
        Ok(out)
    }

    fn nonlinear(&self, s: &State, t: f64) -> Result<State> {
        let rho: Vec<f64> = s[0].iter().map(|d| self.coeff.rho0 + d).collect();
        check_positive(&rho, t)?;
        let full = self.tendencies(s)?;
        let lin = self.linear_tendencies(s)?;
        Ok(full
            .iter()
            .zip(&lin)
            .map(|(f, l)| self.sp.dealias(&f.iter().zip(l).map(|(a, b)| a - b).collect::<Vec<f64>>()))
            .collect())
    }
}

fn to_state(m: &ModelCoefficients, u: &FlowState) -> State {
    let mut s = vec![u.rho.values().iter().map(|r| r - m.rho0).collect()];
    s.extend(u.velocity());
    s
}

fn from_state(m: &ModelCoefficients, grid: &Grid, s: &State) -> Result<FlowState> {
    let rho = Field::scalar(grid.clone(), s[0].iter().map(|d| m.rho0 + d).collect())?;
    FlowState::from_velocity(rho, &s[1..])
}

/// Integrates `∂tρ + div(ρv) = 0`, `ρ(∂t v + (v·∇)v) = −∇p(ρ) + ενΔv` from `init`
/// to `t_end`.
pub fn solve_flow(m: &ModelCoefficients, init: &FlowState, t_end: f64, ctl: &StepControl) -> Result<Vec<FlowSnapshot>> {
    let sys = FlowSystem::new(m, init.grid())?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("end time must be >= 0, got {t_end}")));
    }
    let grid = init.grid().clone();
    let mut out = Vec::new();
    march(&sys, to_state(m, init), 0.0, t_end, ctl, |t, s| {
        check_positive(&s[0].iter().map(|d| m.rho0 + d).collect::<Vec<f64>>(), t)?;
        out.push(FlowSnapshot { t, state: from_state(m, &grid, s)? });
        Ok(())
    })?;
    Ok(out)
}

/// Conservative tendencies `(∂tρ, ∂t(ρv))` of the flow equations at `u`
/// (undealiased; `ν` included).
pub fn flow_tendencies(m: &ModelCoefficients, u: &FlowState) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let sys = FlowSystem::new(m, u.grid())?;
    let s = to_state(m, u);
    let t = sys.tendencies(&s)?;
    let v = &s[1..];
    let rho = u.rho.values();
    let mt =
        (0..sys.ndim).map(|i| (0..rho.len()).map(|p| t[0][p] * v[i][p] + rho[p] * t[1 + i][p]).collect()).collect();
    Ok((t[0].clone(), mt))
}

/// Specific-energy potential `h` with `h′(ρ) = p(ρ)/ρ²` and `h(ρ0) = 0`.
pub fn enthalpy_potential(m: &ModelCoefficients, law: StateLaw, rho: f64) -> f64 {
    let k = pressure_curvature(m);
    let a = law.p0 - m.c * m.c * m.rho0 + k * m.rho0 * m.rho0;
    let b = m.c * m.c - 2.0 * k * m.rho0;
    a * (1.0 / m.rho0 - 1.0 / rho) + b * (rho / m.rho0).ln() + k * (rho - m.rho0)
}

/// Entropy `η(ρ, m) = ρh(ρ) + |m|²/(2ρ)` at one point.
pub fn entropy_density(m: &ModelCoefficients, law: StateLaw, rho: f64, mom: &[f64]) -> f64 {
    rho * enthalpy_potential(m, law, rho) + mom.iter().map(|x| x * x).sum::<f64>() / (2.0 * rho)
}

/// Gradient `η′ = (h + p/ρ − |v|²/2, v)` at one point.
pub fn entropy_gradient(m: &ModelCoefficients, law: StateLaw, rho: f64, mom: &[f64]) -> Vec<f64> {
    let v2: f64 = mom.iter().map(|x| (x / rho).powi(2)).sum();
    let mut g = vec![enthalpy_potential(m, law, rho) + pressure_at(m, law, rho) / rho - 0.5 * v2];
    g.extend(mom.iter().map(|x| x / rho));
    g
}

/// Hessian `η″` in `(ρ, m_1, …, m_n)` at one point (row-major).
pub fn entropy_hessian(m: &ModelCoefficients, rho: f64, mom: &[f64]) -> Vec<Vec<f64>> {
    let n = mom.len();
    let v: Vec<f64> = mom.iter().map(|x| x / rho).collect();
    let v2: f64 = v.iter().map(|x| x * x).sum();
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    h[0][0] = pressure_slope(m, rho) / rho + v2 / rho;
    for i in 0..n {
        h[0][i + 1] = -v[i] / rho;
        h[i + 1][0] = -v[i] / rho;
        h[i + 1][i + 1] = 1.0 / rho;
    }
    h
}

/// Entropy `η` and flux `q = v(η + p)` fields.
pub fn entropy_pair(m: &ModelCoefficients, law: StateLaw, u: &FlowState) -> Result<(Field, Field)> {
    check_positive(u.rho.values(), f64::NAN)?;
    let grid = u.grid();
    let moms = u.momentum.split_components();
    let rho = u.rho.values();
    let eta: Vec<f64> = (0..grid.len())
        .map(|p| {
            let mp: Vec<f64> = moms.iter().map(|c| c[p]).collect();
            entropy_density(m, law, rho[p], &mp)
        })
        .collect();
    let q: Vec<Vec<f64>> = moms
        .iter()
        .map(|mi| (0..grid.len()).map(|p| mi[p] / rho[p] * (eta[p] + pressure_at(m, law, rho[p]))).collect())
        .collect();
    Ok((Field::scalar(grid.clone(), eta)?, Field::from_components(grid.clone(), &q)?))
}

/// Per-sample entropy balance of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilitySample {
    pub t: f64,
    /// `d/dt ∫η` by finite differences over the samples.
    pub entropy_rate: f64,
    /// `∫ div q` (vanishes on periodic grids).
    pub flux_divergence: f64,
    /// `εν ∫ v·Δv`.
    pub viscous_work: f64,
    /// `entropy_rate + flux_divergence − viscous_work` (≤ 0 for admissible solutions).
    pub residual: f64,
}

fn fd_weights(t: &[f64], i: usize) -> Vec<(usize, f64)> {
    let n = t.len();
    // Three-point (possibly one-sided) non-uniform first-derivative stencil.
    let (a, b, c) = if i == 0 {
        (0, 1, 2)
    } else if i == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (i - 1, i, i + 1)
    };
    let x = t[i];
    let (ta, tb, tc) = (t[a], t[b], t[c]);
    let wa = ((x - tb) + (x - tc)) / ((ta - tb) * (ta - tc));
    let wb = ((x - ta) + (x - tc)) / ((tb - ta) * (tb - tc));
    let wc = ((x - ta) + (x - tb)) / ((tc - ta) * (tc - tb));
    vec![(a, wa), (b, wb), (c, wc)]
}

/// Spatial integral of `∂tη + div q − εν v·Δv` at every trajectory sample.
pub fn admissibility_residual(
    m: &ModelCoefficients,
    law: StateLaw,
    traj: &[FlowSnapshot],
) -> Result<Vec<AdmissibilitySample>> {
    if traj.len() < 3 {
        return Err(Error::InvalidInput("admissibility residual needs at least 3 samples".into()));
    }
    let grid = traj[0].state.grid().clone();
    let sp = Spectral::new(&grid);
    let axes: Vec<usize> = (0..grid.ndim()).collect();
    let mut totals = Vec::with_capacity(traj.len());
    let mut flux_div = Vec::with_capacity(traj.len());
    let mut work = Vec::with_capacity(traj.len());
    for snap in traj {
        let (eta, q) = entropy_pair(m, law, &snap.state)?;
        totals.push(integrate(&grid, eta.values()));
        let mut div = vec![0.0; grid.len()];
        for (a, qa) in q.split_components().iter().enumerate() {
            for (o, d) in div.iter_mut().zip(sp.derivative(qa, a, 1)?) {
                *o += d;
            }
        }
        flux_div.push(integrate(&grid, &div));
        let mut vlv = vec![0.0; grid.len()];
        for vi in snap.state.velocity() {
            let lap = sp.laplacian(&vi, &axes)?;
            for ((o, a), b) in vlv.iter_mut().zip(&vi).zip(lap) {
                *o += a * b;
            }
        }
        work.push(m.eps * m.nu * integrate(&grid, &vlv));
    }
    let times: Vec<f64> = traj.iter().map(|s| s.t).collect();
    Ok((0..traj.len())
        .map(|i| {
            let rate: f64 = fd_weights(&times, i).iter().map(|&(j, w)| w * totals[j]).sum();
            AdmissibilitySample {
                t: times[i],
                entropy_rate: rate,
                flux_divergence: flux_div[i],
                viscous_work: work[i],
                residual: rate + flux_div[i] - work[i],
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use std::f64::consts::PI;

    fn coeff() -> ModelCoefficients {
        ModelCoefficients::new(1.0, 1.0, 2.0, 0.0, 0.1).unwrap()
    }

    #[test]
    fn pressure_examples() {
        let m = coeff();
        let law = StateLaw { p0: 0.7 };
        assert!((pressure_at(&m, law, 1.1) - (0.7 + 0.105)).abs() < 1e-14);
        assert_eq!(pressure_at(&m, law, 1.0), 0.7);
    }

    #[test]
    fn flux_example_1d() {
        let m = coeff();
        let g = Grid::new(vec![Axis::periodic("x", 1.0, 4)], Frame::Physical).unwrap();
        let u =
            FlowState::new(Field::scalar(g.clone(), vec![2.0; 4]).unwrap(), Field::scalar(g, vec![6.0; 4]).unwrap())
                .unwrap();
        let f = flux(&m, StateLaw::default(), &u, 0).unwrap();
        let p2 = pressure_at(&m, StateLaw::default(), 2.0);
        assert_eq!(f.values()[0], 6.0);
        assert!((f.values()[1] - (18.0 + p2)).abs() < 1e-13);
    }

    #[test]
    fn rejects_nonpositive_density() {
        let g = Grid::new(vec![Axis::periodic("x", 1.0, 4)], Frame::Physical).unwrap();
        let r = FlowState::new(Field::scalar(g.clone(), vec![1.0, 0.0, 1.0, 1.0]).unwrap(), Field::zeros(g, 1));
        assert!(matches!(r, Err(Error::NonPositiveDensity { .. })));
    }

    #[test]
    fn constant_state_is_stationary() {
        let m = ModelCoefficients::new(1.0, 1.3, 1.4, 0.1, 0.1).unwrap();
        let g = Grid::new(vec![Axis::periodic("x", 2.0 * PI, 16), Axis::periodic("y", 2.0 * PI, 8)], Frame::Physical)
            .unwrap();
        let u = FlowState::constant(&g, 1.3).unwrap();
        let tr = solve_flow(&m, &u, 1.0, &StepControl::new(0.1)).unwrap();
        let last = &tr.last().unwrap().state;
        assert!(last.rho.sub(&u.rho).unwrap().linf_norm() < 1e-13);
        assert!(last.momentum.linf_norm() < 1e-13);
    }
}
