//! Correctors and approximate flow states built from model solutions, and the
//! Kuznetsov → Westervelt change of unknown.
//!
//! Every corrector is an expression in one *potential*: `u` (Kuznetsov, physical
//! frame), `Φ = (c²/ρ0)∂τ⁻¹I` (KZK frame) or `Ψ = −(c/ρ0)∂z⁻¹ξ` (NPE frame).

use crate::calculus::{evaluate_all, sum, Expr, FrameCalculus, JetContext};
use crate::coefficients::ModelCoefficients;
use crate::error::{Error, Result};
use crate::grid::{Field, Frame, Grid};
use crate::ns_euler::FlowState;
use crate::solvers::{kuznetsov_acceleration, paraxial_jet, KuznetsovSwitches, ModelKind, ModelState, ParaxialOptions};
use crate::spectral::Spectral;

/// The potential every expression below is written in.
pub fn potential() -> Expr {
    Expr::base(0)
}

/// Frame calculus matching a model's grid.
pub fn frame_calculus(kind: ModelKind, m: &ModelCoefficients, ndim: usize) -> FrameCalculus {
    let frame = match kind {
        ModelKind::Kuznetsov | ModelKind::Westervelt => Frame::Physical,
        ModelKind::Kzk => Frame::Kzk,
        ModelKind::Npe => Frame::Npe,
    };
    FrameCalculus::new(frame, m.c, m.eps, ndim)
}

/// Kuznetsov first density corrector `(ρ0/c²)∂t u`.
pub fn kuznetsov_rho1(m: &ModelCoefficients, u: &Expr) -> Expr {
    u.ev().scale(m.rho0 / (m.c * m.c))
}

/// Kuznetsov second density corrector
/// `−ρ0(γ−2)/(2c⁴)(∂t u)² − ρ0/(2c²)|∇u|² − (ν/c²)Δu`.
pub fn kuznetsov_rho2(m: &ModelCoefficients, u: &Expr, ndim: usize) -> Expr {
    let c2 = m.c * m.c;
    let grad2 = sum((0..ndim).map(|i| u.d(i, 1).sq()));
    let lap = sum((0..ndim).map(|i| u.d(i, 2)));
    Expr::lin(vec![
        (-m.rho0 * (m.gamma - 2.0) / (2.0 * c2 * c2), u.ev().sq()),
        (-m.rho0 / (2.0 * c2), grad2),
        (-m.nu / c2, lap),
    ])
}

/// KZK profile `I = (ρ0/c²)∂τΦ`.
pub fn kzk_first(m: &ModelCoefficients, phi: &Expr) -> Expr {
    phi.d(0, 1).scale(m.rho0 / (m.c * m.c))
}

/// KZK second profile `J = −ρ0(γ−1)/(2c⁴)(∂τΦ)² − (ν/c⁴)∂τ²Φ`.
pub fn kzk_second(m: &ModelCoefficients, phi: &Expr) -> Expr {
    let c4 = m.c.powi(4);
    Expr::lin(vec![(-m.rho0 * (m.gamma - 1.0) / (2.0 * c4), phi.d(0, 1).sq()), (-m.nu / c4, phi.d(0, 2))])
}

/// Full second density profile `H = J + ε[…] + ε²[…]`.
pub fn kzk_second_full(m: &ModelCoefficients, phi: &Expr, ndim: usize) -> Expr {
    let c = m.c;
    let c2 = c * c;
    let grad_y2 = sum((1..ndim).map(|j| phi.d(j, 1).sq()));
    let lap_y = sum((1..ndim).map(|j| phi.d(j, 2)));
    let first = Expr::lin(vec![
        (-m.rho0 / (2.0 * c2), grad_y2 - (2.0 / c) * (phi.ev() * phi.d(0, 1))),
        (-m.nu / c2, lap_y - (2.0 / c) * phi.ev().d(0, 1)),
    ]);
    let second = Expr::lin(vec![(-m.rho0 / (2.0 * c2), phi.ev().sq()), (-m.nu / c2, phi.ev().ev())]);
    Expr::lin(vec![(1.0, kzk_second(m, phi)), (m.eps, first), (m.eps * m.eps, second)])
}

/// NPE profile `ξ = −(ρ0/c)∂zΨ`.
pub fn npe_first(m: &ModelCoefficients, psi: &Expr) -> Expr {
    psi.d(0, 1).scale(-m.rho0 / m.c)
}

/// NPE second profile `χ = (ρ0/c²)∂τΨ − ρ0(γ−1)/(2c²)(∂zΨ)² − (ν/c²)∂z²Ψ`.
pub fn npe_second(m: &ModelCoefficients, psi: &Expr) -> Expr {
    let c2 = m.c * m.c;
    Expr::lin(vec![
        (m.rho0 / c2, psi.ev()),
        (-m.rho0 * (m.gamma - 1.0) / (2.0 * c2), psi.d(0, 1).sq()),
        (-m.nu / c2, psi.d(0, 2)),
    ])
}

/// Density and velocity of the approximate flow for a model, as expressions in
/// its potential: `ρ0 + ε·first + ε²·second` and `v = −ε∇(potential)`
/// (with the frame's `ε` and `√ε` component scalings).
pub fn ansatz_exprs(kind: ModelKind, m: &ModelCoefficients, ndim: usize) -> Result<(Expr, Vec<Expr>)> {
    let p = potential();
    let (first, second) = match kind {
        ModelKind::Kuznetsov => (kuznetsov_rho1(m, &p), kuznetsov_rho2(m, &p, ndim)),
        ModelKind::Kzk => (kzk_first(m, &p), kzk_second(m, &p)),
        ModelKind::Npe => (npe_first(m, &p), npe_second(m, &p)),
        ModelKind::Westervelt => {
            return Err(Error::InvalidInput("no flow ansatz is attached to the Westervelt model".into()))
        }
    };
    let fc = frame_calculus(kind, m, ndim);
    let rho = Expr::lin(vec![(1.0, Expr::constant(m.rho0)), (m.eps, first), (m.eps * m.eps, second)]);
    let v = fc.grad(&p).into_iter().map(|g| g.scale(-m.eps)).collect();
    Ok((rho, v))
}

/// Correctors of one model state.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorSet {
    pub model: ModelKind,
    /// `ρ1`, `I` or `ξ`.
    pub first: Field,
    /// `ρ2`, `J` or `χ`.
    pub second: Field,
    /// `H` (KZK only).
    pub second_full: Option<Field>,
    /// `Φ` or `Ψ` (paraxial models only).
    pub potential: Option<Field>,
    /// Evolution derivative of the potential (`∂zΦ` or `∂τΨ`).
    pub potential_rate: Option<Field>,
}

impl CorrectorSet {
    /// Replaces the truncated second profile `J` by the full `H` (KZK only),
    /// for sensitivity runs.
    pub fn with_full_second(mut self) -> Result<Self> {
        self.second = self.second_full.clone().ok_or_else(|| Error::MissingInput("full second profile".into()))?;
        Ok(self)
    }
}

/// Evolution jet `[P, ∂P, …]` of a model state's potential. The wave models
/// supply at most second order (`u`, `∂t u`, `∂t²u` from the equation).
pub fn potential_jet(kind: ModelKind, m: &ModelCoefficients, state: &ModelState, order: usize) -> Result<Vec<Field>> {
    m.validate()?;
    let grid = state.primary.grid().clone();
    match kind {
        ModelKind::Kuznetsov => {
            if order > 2 {
                return Err(Error::MissingInput("wave-model jets are limited to second order".into()));
            }
            let ut = state.velocity.clone().ok_or_else(|| Error::MissingInput("velocity (∂t u)".into()))?;
            let mut jet = vec![state.primary.clone(), ut.clone()];
            if order == 2 {
                jet.push(kuznetsov_acceleration(m, KuznetsovSwitches::default(), &state.primary, &ut)?);
            }
            jet.truncate(order + 1);
            Ok(jet)
        }
        ModelKind::Kzk | ModelKind::Npe => {
            let frame = if kind == ModelKind::Kzk { Frame::Kzk } else { Frame::Npe };
            let sp = Spectral::new(&grid);
            // The profile itself must be mean-zero; its derivatives are by construction.
            sp.antiderivative(state.primary.values(), 0)?;
            let scale = if kind == ModelKind::Kzk { m.c * m.c / m.rho0 } else { -m.c / m.rho0 };
            paraxial_jet(m, frame, ParaxialOptions::default(), &state.primary, order)?
                .iter()
                .map(|f| {
                    let a = sp.antiderivative_unchecked(f.values(), 0)?;
                    Field::scalar(grid.clone(), a.into_iter().map(|v| scale * v).collect())
                })
                .collect()
        }
        ModelKind::Westervelt => Err(Error::InvalidInput("Westervelt states carry Π, not a potential".into())),
    }
}

fn jet_context(grid: &Grid, jet: &[Field]) -> Result<JetContext> {
    JetContext::new(grid, vec![jet.iter().map(|f| f.values().to_vec()).collect()])
}

fn eval_fields(grid: &Grid, jet: &[Field], exprs: &[Expr]) -> Result<Vec<Field>> {
    let ctx = jet_context(grid, jet)?;
    evaluate_all(&ctx, exprs)?.iter().map(|v| Field::scalar(grid.clone(), ctx.value(v))).collect()
}

/// Evaluates the closed-form correctors of `state`.
pub fn build_correctors(kind: ModelKind, m: &ModelCoefficients, state: &ModelState) -> Result<CorrectorSet> {
    if state.model != kind {
        return Err(Error::InvalidInput(format!("state belongs to {}, not {}", state.model.tag(), kind.tag())));
    }
    let grid = state.primary.grid().clone();
    let ndim = grid.ndim();
    let p = potential();
    match kind {
        ModelKind::Kuznetsov => {
            let jet = potential_jet(kind, m, state, 1)?;
            let f = eval_fields(&grid, &jet, &[kuznetsov_rho1(m, &p), kuznetsov_rho2(m, &p, ndim)])?;
            Ok(CorrectorSet {
                model: kind,
                first: f[0].clone(),
                second: f[1].clone(),
                second_full: None,
                potential: None,
                potential_rate: None,
            })
        }
        ModelKind::Kzk => {
            let jet = potential_jet(kind, m, state, 2)?;
            let f = eval_fields(&grid, &jet, &[kzk_second(m, &p), kzk_second_full(m, &p, ndim)])?;
            Ok(CorrectorSet {
                model: kind,
                first: state.primary.clone(),
                second: f[0].clone(),
                second_full: Some(f[1].clone()),
                potential: Some(jet[0].clone()),
                potential_rate: Some(jet[1].clone()),
            })
        }
        ModelKind::Npe => {
            let jet = potential_jet(kind, m, state, 1)?;
            let f = eval_fields(&grid, &jet, &[npe_second(m, &p)])?;
            Ok(CorrectorSet {
                model: kind,
                first: state.primary.clone(),
                second: f[0].clone(),
                second_full: None,
                potential: Some(jet[0].clone()),
                potential_rate: Some(jet[1].clone()),
            })
        }
        ModelKind::Westervelt => Err(Error::InvalidInput("no correctors are attached to the Westervelt model".into())),
    }
}

/// Density and velocity of an approximate flow in the model's own frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximateFlow {
    pub rho: Field,
    /// One component per grid axis (axial first).
    pub velocity: Field,
}

impl ApproximateFlow {
    /// Converts a physical-frame approximate flow to `(ρ, ρv)`.
    pub fn to_flow_state(&self) -> Result<FlowState> {
        FlowState::from_velocity(self.rho.clone(), &self.velocity.split_components())
    }
}

/// Assembles `ρ = ρ0 + ε·first + ε²·second` and the model's velocity.
pub fn assemble_ansatz(
    kind: ModelKind,
    m: &ModelCoefficients,
    state: &ModelState,
    correctors: &CorrectorSet,
) -> Result<ApproximateFlow> {
    if correctors.model != kind {
        return Err(Error::InvalidInput("corrector set belongs to another model".into()));
    }
    correctors.first.ensure_compatible(&correctors.second)?;
    let grid = state.primary.grid().clone();
    if correctors.first.grid() != &grid {
        return Err(Error::GridMismatch("correctors and state live on different grids".into()));
    }
    let ndim = grid.ndim();
    let rho: Vec<f64> = correctors
        .first
        .values()
        .iter()
        .zip(correctors.second.values())
        .map(|(a, b)| m.rho0 + m.eps * a + m.eps * m.eps * b)
        .collect();
    let jet = match kind {
        ModelKind::Kuznetsov => vec![state.primary.clone()],
        ModelKind::Kzk | ModelKind::Npe => {
            let pot = correctors.potential.clone().ok_or_else(|| Error::MissingInput("potential".into()))?;
            let rate = correctors.potential_rate.clone().ok_or_else(|| Error::MissingInput("potential rate".into()))?;
            vec![pot, rate]
        }
        ModelKind::Westervelt => return Err(Error::InvalidInput("no flow ansatz for Westervelt".into())),
    };
    let (_, v) = ansatz_exprs(kind, m, ndim)?;
    let comps = eval_fields(&grid, &jet, &v)?;
    Ok(ApproximateFlow {
        rho: Field::scalar(grid.clone(), rho)?,
        velocity: Field::from_components(grid, &comps.iter().map(|f| f.values().to_vec()).collect::<Vec<_>>())?,
    })
}

/// `Π = u + (ε/c²)u∂t u`.
pub fn westervelt_transform(m: &ModelCoefficients, u: &Field, ut: &Field) -> Result<Field> {
    u.ensure_compatible(ut)?;
    let k = m.eps / (m.c * m.c);
    Field::new(
        u.grid().clone(),
        u.components(),
        u.values().iter().zip(ut.values()).map(|(a, b)| a + k * a * b).collect(),
    )
}

/// Westervelt data `(Π0, Π1)` matching Kuznetsov data `(u0, u1)`:
/// `Π0 = u0 + (ε/c²)u0u1`, `Π1 = u1 + (ε/c²)(u1² + u0·∂t²u(0))`, with `∂t²u(0)`
/// from the Kuznetsov equation (fails when `1 − αεu1 < 1/2`).
pub fn westervelt_initial_data(m: &ModelCoefficients, u0: &Field, u1: &Field) -> Result<(Field, Field)> {
    let utt = kuznetsov_acceleration(m, KuznetsovSwitches::default(), u0, u1)?;
    let k = m.eps / (m.c * m.c);
    let pi0 = westervelt_transform(m, u0, u1)?;
    let pi1: Vec<f64> = (0..u0.values().len())
        .map(|i| {
            let (a, b, acc) = (u0.values()[i], u1.values()[i], utt.values()[i]);
            b + k * (b * b + a * acc)
        })
        .collect();
    Ok((pi0, Field::scalar(u0.grid().clone(), pi1)?))
}
