//! Error norms between compared states.

use nlacoustics::grid::Field;
use nlacoustics::ns_euler::FlowState;
use nlacoustics::solvers::ModelState;
use nlacoustics::spectral::Spectral;

use crate::error::{ExperimentError, Result};

/// Either kind of state a study compares.
#[derive(Debug, Clone, Copy)]
pub enum Comparable<'a> {
    Flow(&'a FlowState),
    Model(&'a ModelState),
}

/// Quadrature-weighted L² norm of `a − b` over all components.
pub fn l2_difference(a: &Field, b: &Field) -> Result<f64> {
    Ok(a.sub(b)?.l2_norm())
}

/// `√(‖ρ − ρ̄‖² + ‖m − m̄‖²)` for two flow states.
pub fn flow_error(a: &FlowState, b: &FlowState) -> Result<f64> {
    let r = l2_difference(&a.rho, &b.rho)?;
    let m = l2_difference(&a.momentum, &b.momentum)?;
    Ok(r.hypot(m))
}

/// `√(‖∂t(u − ū)‖² + ‖∇(u − ū)‖²)` given both states and their time
/// derivatives; the gradient is spectral.
pub fn energy_error(u: &Field, ut: &Field, ubar: &Field, ubar_t: &Field) -> Result<f64> {
    let diff = u.sub(ubar)?;
    let rate = l2_difference(ut, ubar_t)?;
    let grid = diff.grid().clone();
    let sp = Spectral::new(&grid);
    let mut grad_sq = 0.0;
    for axis in 0..grid.ndim() {
        let d = sp.derivative(diff.values(), axis, 1)?;
        grad_sq += nlacoustics::grid::l2_norm(&grid, &d).powi(2);
    }
    Ok((rate * rate + grad_sq).sqrt())
}

/// Distance between two states of the same kind: L² for flows and paraxial
/// profiles, the energy norm for wave-model states (which carry `∂t`).
pub fn l2_error(a: Comparable<'_>, b: Comparable<'_>) -> Result<f64> {
    match (a, b) {
        (Comparable::Flow(a), Comparable::Flow(b)) => flow_error(a, b),
        (Comparable::Model(a), Comparable::Model(b)) => {
            if a.model != b.model {
                return Err(ExperimentError::InvalidInput("states belong to different models".into()));
            }
            match (&a.velocity, &b.velocity) {
                (Some(at), Some(bt)) => energy_error(&a.primary, at, &b.primary, bt),
                (None, None) => l2_difference(&a.primary, &b.primary),
                _ => Err(ExperimentError::InvalidInput("only one state carries a velocity".into())),
            }
        }
        _ => Err(ExperimentError::InvalidInput("cannot compare a flow state with a model state".into())),
    }
}

/// `H^s` norm `(Σ (1 + |k|²)^s |f̂_k|²)^{1/2}`, normalized so that `s = 0`
/// gives the quadrature L² norm.
pub fn sobolev_norm(f: &Field, order: u32) -> f64 {
    if order == 0 {
        return f.l2_norm();
    }
    let grid = f.grid().clone();
    let sp = Spectral::new(&grid);
    let spec = sp.forward(f.values());
    let n = grid.len() as f64;
    let volume: f64 = grid.axes().iter().map(|a| a.length).product();
    let mut acc = 0.0;
    for (p, z) in spec.iter().enumerate() {
        let idx = grid.unravel(p);
        let k2: f64 = idx.iter().enumerate().map(|(a, &i)| sp.wavenumber(a, i).powi(2)).sum();
        acc += (1.0 + k2).powi(order as i32) * z.norm_sqr();
    }
    (acc * volume / (n * n)).sqrt()
}
