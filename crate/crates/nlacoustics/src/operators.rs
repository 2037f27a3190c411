//! Exact model operators written as [`Expr`] trees in any frame.

use crate::calculus::{sum, Expr, FrameCalculus};
use crate::coefficients::ModelCoefficients;
use crate::ns_euler::pressure_curvature;

/// `∂t²u − c²Δu − ε∂t(|∇u|² + (γ−1)/(2c²)(∂t u)² + (ν/ρ0)Δu)`.
pub fn kuznetsov_operator(fc: &FrameCalculus, m: &ModelCoefficients, u: &Expr) -> Expr {
    let ut = fc.dt(u);
    let g = fc.grad(u);
    let lap = fc.lap(u);
    let flux = Expr::lin(vec![
        (1.0, FrameCalculus::dot(&g, &g)),
        ((m.gamma - 1.0) / (2.0 * m.c * m.c), ut.sq()),
        (m.nu / m.rho0, lap.clone()),
    ]);
    Expr::lin(vec![(1.0, fc.dt(&ut)), (-m.c * m.c, lap), (-m.eps, fc.dt(&flux))])
}

/// `∂t²Π − c²ΔΠ − ε∂t((ν/ρ0)ΔΠ + (γ+1)/(2c²)(∂t Π)²)`.
pub fn westervelt_operator(fc: &FrameCalculus, m: &ModelCoefficients, pi: &Expr) -> Expr {
    let pt = fc.dt(pi);
    let lap = fc.lap(pi);
    let flux = Expr::lin(vec![(m.nu / m.rho0, lap.clone()), ((m.gamma + 1.0) / (2.0 * m.c * m.c), pt.sq())]);
    Expr::lin(vec![(1.0, fc.dt(&pt)), (-m.c * m.c, lap), (-m.eps, fc.dt(&flux))])
}

/// Pressure perturbation `c²(ρ−ρ0) + κ(ρ−ρ0)²` (the constant `p0` drops out of
/// every gradient).
pub fn pressure_perturbation(m: &ModelCoefficients, rho: &Expr) -> Expr {
    let d = rho.clone() - Expr::constant(m.rho0);
    Expr::lin(vec![(m.c * m.c, d.clone()), (pressure_curvature(m), d.sq())])
}

/// Mass `∂tρ + div(ρv)` and momentum `ρ(∂t v + (v·∇)v) + ∇p − εν Δv` residuals.
pub fn ns_operator(fc: &FrameCalculus, m: &ModelCoefficients, rho: &Expr, v: &[Expr]) -> (Expr, Vec<Expr>) {
    let mass = fc.dt(rho) + fc.div(&v.iter().map(|vi| rho.clone() * vi.clone()).collect::<Vec<_>>());
    let p = pressure_perturbation(m, rho);
    let momentum = (0..v.len())
        .map(|k| {
            let conv = fc.dt(&v[k]) + sum((0..v.len()).map(|i| v[i].clone() * fc.dx(&v[k], i)));
            Expr::lin(vec![(1.0, rho.clone() * conv), (1.0, fc.dx(&p, k)), (-m.eps * m.nu, fc.lap(&v[k]))])
        })
        .collect();
    (mass, momentum)
}
