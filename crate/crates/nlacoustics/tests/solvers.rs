use std::f64::consts::PI;

use nlacoustics::frames::transport_kzk_to_npe;
use nlacoustics::grid::{Axis, Field, Frame, Grid};
use nlacoustics::solvers::{
    npe_rhs, solve_kuznetsov, solve_kzk, solve_npe, solve_westervelt, KuznetsovSwitches, ParaxialOptions, Scheme,
    StepControl, WesterveltSwitches,
};
use nlacoustics::spectral::Spectral;
use nlacoustics::{Error, ModelCoefficients};

fn physical(n: usize, length: f64) -> Grid {
    Grid::new(vec![Axis::periodic("x1", length, n)], Frame::Physical).unwrap()
}

fn kzk_grid(nt: usize, ny: usize, ly: f64) -> Grid {
    Grid::new(vec![Axis::periodic("tau", 2.0 * PI, nt), Axis::periodic("y", ly, ny)], Frame::Kzk).unwrap()
}

fn linear_only() -> ParaxialOptions {
    ParaxialOptions { nonlinearity: false, diffraction: false, ..Default::default() }
}

fn gaussian_beam(g: &Grid, ly: f64) -> Field {
    Field::from_fn(g.clone(), |x| {
        let y = x[1] - ly / 2.0;
        -(-y * y).exp() * x[0].sin()
    })
    .unwrap()
}

#[test]
fn zero_data_stays_zero_for_every_model() {
    let m = ModelCoefficients::new(1.0, 1.0, 1.4, 0.1, 0.1).unwrap();
    let ctl = StepControl::new(0.05);
    let g = physical(16, 2.0 * PI);
    let z = Field::zeros(g.clone(), 1);
    for s in solve_kuznetsov(&m, &z, &z, 1.0, &ctl, KuznetsovSwitches::default()).unwrap() {
        assert_eq!(s.primary.linf_norm(), 0.0);
    }
    for s in solve_westervelt(&m, &z, &z, 1.0, &ctl, WesterveltSwitches::default()).unwrap() {
        assert_eq!(s.primary.linf_norm(), 0.0);
    }
    let k = Field::zeros(kzk_grid(16, 8, 8.0), 1);
    for s in solve_kzk(&m, &k, 1.0, &ctl, Default::default(), None).unwrap() {
        assert_eq!(s.primary.linf_norm(), 0.0);
    }
    let n = Field::zeros(Grid::new(vec![Axis::periodic("z", 3.0, 16)], Frame::Npe).unwrap(), 1);
    for s in solve_npe(&m, &n, 1.0, &ctl, Default::default()).unwrap() {
        assert_eq!(s.primary.linf_norm(), 0.0);
    }
}

#[test]
fn linear_wave_mode() {
    let m = ModelCoefficients::new(1.3, 1.0, 1.4, 0.0, 0.1).unwrap();
    let g = physical(16, 2.0 * PI);
    let k = 3.0;
    let u0 = Field::from_fn(g.clone(), |x| (k * x[0]).cos()).unwrap();
    let u1 = Field::zeros(g.clone(), 1);
    let traj = solve_kuznetsov(&m, &u0, &u1, 1.0, &StepControl::new(0.01), KuznetsovSwitches::linear()).unwrap();
    let last = traj.last().unwrap();
    assert_eq!(last.evol, 1.0);
    for (p, v) in last.primary.values().iter().enumerate() {
        let x = g.point_coords(p)[0];
        assert!((v - (k * x).cos() * (m.c * k).cos()).abs() <= 1e-6);
    }
}

#[test]
fn damped_mode_follows_the_dispersion_root() {
    // λ² + (εν/ρ0)k²λ + c²k² = 0 with u(0) = cos kx, u_t(0) = 0.
    let m = ModelCoefficients::new(1.0, 1.0, 1.4, 0.5, 0.2).unwrap();
    let g = physical(16, 2.0 * PI);
    let k = 2.0;
    let u0 = Field::from_fn(g.clone(), |x| (k * x[0]).cos()).unwrap();
    let u1 = Field::zeros(g.clone(), 1);
    let switches = KuznetsovSwitches { viscosity: true, ..KuznetsovSwitches::linear() };
    let t_end = 4.0;
    let traj = solve_kuznetsov(&m, &u0, &u1, t_end, &StepControl::new(0.02).with_substeps(10), switches).unwrap();
    let damping = m.eps * m.nu / m.rho0 * k * k / 2.0;
    let omega = (m.c * m.c * k * k - damping * damping).sqrt();
    for s in &traj {
        let t = s.evol;
        let amp = (-damping * t).exp() * ((omega * t).cos() + damping / omega * (omega * t).sin());
        let idx = 0; // x = 0, cos(kx) = 1
        assert!((s.primary.values()[idx] - amp).abs() <= 1e-4 * amp.abs().max(1e-2), "t={t}");
    }
    // Energy decay rate from the envelope of the last samples.
    let rate = -(traj.last().unwrap().primary.linf_norm().ln()
        - ((omega * t_end).cos() + damping / omega * (omega * t_end).sin()).abs().ln())
        / t_end;
    assert!((rate - damping).abs() <= 1e-4 * damping);
}

#[test]
fn westervelt_and_kuznetsov_share_the_linear_limit() {
    let m = ModelCoefficients::new(1.1, 1.2, 1.4, 0.3, 0.1).unwrap();
    let g = Grid::new(vec![Axis::periodic("x1", 2.0 * PI, 16), Axis::periodic("x2", 4.0, 8)], Frame::Physical).unwrap();
    let u0 = Field::from_fn(g.clone(), |x| x[0].sin() * (PI * x[1] / 2.0).cos()).unwrap();
    let u1 = Field::from_fn(g.clone(), |x| 0.2 * (2.0 * x[0]).cos()).unwrap();
    let ctl = StepControl::new(0.05);
    let kz =
        solve_kuznetsov(&m, &u0, &u1, 1.0, &ctl, KuznetsovSwitches { viscosity: true, ..KuznetsovSwitches::linear() })
            .unwrap();
    let ws =
        solve_westervelt(&m, &u0, &u1, 1.0, &ctl, WesterveltSwitches { nonlinearity: false, viscosity: true }).unwrap();
    for (a, b) in kz.iter().zip(&ws) {
        assert!(a.primary.sub(&b.primary).unwrap().linf_norm() <= 1e-12);
    }
}

#[test]
fn kzk_viscous_mode_decay_rate() {
    let m = ModelCoefficients::new(1.5, 1.2, 1.4, 0.4, 0.1).unwrap();
    let g = Grid::new(vec![Axis::periodic("tau", 2.0 * PI, 16)], Frame::Kzk).unwrap();
    let k = 3.0;
    let i0 = Field::from_fn(g, |x| (k * x[0]).sin()).unwrap();
    let z_end = 2.0;
    let traj = solve_kzk(&m, &i0, z_end, &StepControl::new(0.1), linear_only(), None).unwrap();
    let measured = (traj.last().unwrap().primary.l2_norm() / i0.l2_norm()).ln() / z_end;
    let expect = -m.nu * k * k / (2.0 * m.c.powi(3) * m.rho0);
    assert!((measured - expect).abs() <= 1e-6 * expect.abs());
}

#[test]
fn npe_viscous_mode_decay_rate() {
    let m = ModelCoefficients::new(1.5, 1.2, 1.4, 0.4, 0.1).unwrap();
    let g = Grid::new(vec![Axis::periodic("z", 2.0 * PI, 16)], Frame::Npe).unwrap();
    let k = 2.0;
    let xi0 = Field::from_fn(g, |x| (k * x[0]).cos()).unwrap();
    let tau_end = 1.5;
    let traj = solve_npe(&m, &xi0, tau_end, &StepControl::new(0.1), linear_only()).unwrap();
    let measured = (traj.last().unwrap().primary.l2_norm() / xi0.l2_norm()).ln() / tau_end;
    let expect = -m.nu * k * k / (2.0 * m.rho0);
    assert!((measured - expect).abs() <= 1e-6 * expect.abs());
}

#[test]
fn paraxial_means_stay_zero_over_long_marches() {
    let m = ModelCoefficients::new(1.0, 1.0, 1.4, 0.2, 0.1).unwrap();
    let ly = 16.0;
    let g = kzk_grid(32, 32, ly);
    let i0 = gaussian_beam(&g, ly);
    let traj = solve_kzk(&m, &i0, 1.0, &StepControl::new(1e-3).with_substeps(100), Default::default(), None).unwrap();
    let sp = Spectral::new(&g);
    for s in &traj {
        assert!(sp.max_line_mean(s.primary.values(), 0) <= 1e-12);
    }
    let gn = Grid::new(vec![Axis::periodic("z", 2.0 * PI, 32), Axis::periodic("y", ly, 16)], Frame::Npe).unwrap();
    let xi0 = Field::from_fn(gn.clone(), |x| (x[0]).cos() * (-(x[1] - ly / 2.0).powi(2)).exp()).unwrap();
    let traj = solve_npe(&m, &xi0, 1.0, &StepControl::new(1e-3).with_substeps(100), Default::default()).unwrap();
    let sp = Spectral::new(&gn);
    for s in &traj {
        assert!(sp.max_line_mean(s.primary.values(), 0) <= 1e-12);
    }
}

#[test]
fn nonzero_mean_initial_profile_is_rejected() {
    let m = ModelCoefficients::new(1.0, 1.0, 1.4, 0.2, 0.1).unwrap();
    let g = Grid::new(vec![Axis::periodic("tau", 2.0 * PI, 16)], Frame::Kzk).unwrap();
    let i0 = Field::from_fn(g, |x| 0.1 + x[0].sin()).unwrap();
    assert!(matches!(
        solve_kzk(&m, &i0, 1.0, &StepControl::new(0.1), Default::default(), None),
        Err(Error::NonZeroMean { .. })
    ));
}

#[test]
fn viscous_beam_norm_decays_monotonically() {
    let m = ModelCoefficients::new(1.0, 1.0, 1.4, 0.5, 0.1).unwrap();
    let ly = 16.0;
    let g = kzk_grid(32, 32, ly);
    let i0 = gaussian_beam(&g, ly);
    let traj = solve_kzk(&m, &i0, 2.0, &StepControl::new(0.01).with_substeps(10), Default::default(), None).unwrap();
    let norms: Vec<f64> = traj.iter().map(|s| s.primary.l2_norm()).collect();
    let skip = norms.len() / 10;
    for w in norms[skip..].windows(2) {
        assert!(w[1] < w[0], "{norms:?}");
    }
}

fn kzk_error_at(step: f64, reference: &Field, m: &ModelCoefficients, i0: &Field, scheme: Scheme) -> f64 {
    let t = solve_kzk(m, i0, 0.5, &StepControl::new(step).with_scheme(scheme), Default::default(), None).unwrap();
    t.last().unwrap().primary.sub(reference).unwrap().l2_norm()
}

#[test]
fn splitting_converges_at_second_order() {
    let m = ModelCoefficients::new(1.0, 1.0, 1.4, 0.1, 0.1).unwrap();
    let ly = 8.0;
    let g = kzk_grid(32, 16, ly);
    let i0 = Field::from_fn(g, |x| 0.5 * x[0].sin() * (2.0 * PI * x[1] / ly).cos() + 0.2 * (2.0 * x[0]).sin()).unwrap();
    let reference =
        solve_kzk(&m, &i0, 0.5, &StepControl::new(0.5 / 1024.0).with_scheme(Scheme::Lawson), Default::default(), None)
            .unwrap()
            .pop()
            .unwrap()
            .primary;
    let e1 = kzk_error_at(0.05, &reference, &m, &i0, Scheme::Strang);
    let e2 = kzk_error_at(0.025, &reference, &m, &i0, Scheme::Strang);
    let ratio = e1 / e2;
    assert!((3.4..=4.6).contains(&ratio), "ratio {ratio}");
}

#[test]
fn inviscid_linear_diffraction_conserves_the_norm() {
    let m = ModelCoefficients::new(1.0, 1.0, 1.4, 0.0, 0.1).unwrap();
    let ly = 16.0;
    let g = kzk_grid(32, 32, ly);
    let i0 = gaussian_beam(&g, ly);
    let opts = ParaxialOptions { nonlinearity: false, ..Default::default() };
    // Diffraction is advanced explicitly; its RK4 amplitude error scales as h⁵ per unit range.
    let traj = solve_kzk(&m, &i0, 1.0, &StepControl::new(0.005), opts, None).unwrap();
    let n0 = i0.l2_norm();
    let n1 = traj.last().unwrap().primary.l2_norm();
    assert!(((n1 - n0) / n0).abs() <= 1e-10, "{}", (n1 - n0) / n0);
}

#[test]
fn identical_runs_are_bit_identical() {
    let m = ModelCoefficients::new(1.0, 1.0, 1.4, 0.1, 0.1).unwrap();
    let ly = 8.0;
    let g = kzk_grid(16, 16, ly);
    let i0 = gaussian_beam(&g, ly);
    let run = || solve_kzk(&m, &i0, 0.3, &StepControl::new(0.01), Default::default(), None).unwrap();
    let (a, b) = (run(), run());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.primary.values(), y.primary.values());
    }
}

#[test]
fn transported_kzk_solution_satisfies_npe() {
    // ∂τ_N ξ from central differences of the transported KZK trajectory,
    // compared against the NPE right-hand side; shrinks with the step.
    let m = ModelCoefficients::new(1.3, 1.0, 1.4, 0.1, 0.1).unwrap();
    let ly = 8.0;
    let g = kzk_grid(32, 16, ly);
    let i0 = Field::from_fn(g, |x| 0.5 * x[0].sin() * (2.0 * PI * x[1] / ly).cos()).unwrap();
    let residual = |h: f64| {
        let traj = solve_kzk(
            &m,
            &i0,
            2.0 * h,
            &StepControl::new(h / 8.0).with_scheme(Scheme::Lawson).with_substeps(8),
            Default::default(),
            None,
        )
        .unwrap();
        assert_eq!(traj.len(), 3);
        let xi: Vec<Field> = traj.iter().map(|s| transport_kzk_to_npe(&s.primary, m.c).unwrap()).collect();
        // τ_N = z_K / c
        let dtau = h / m.c;
        let rate: Vec<f64> = xi[2].values().iter().zip(xi[0].values()).map(|(a, b)| (a - b) / (2.0 * dtau)).collect();
        let rhs = npe_rhs(&m, Default::default(), &xi[1]).unwrap();
        let r = Field::scalar(rhs.grid().clone(), rate).unwrap();
        r.sub(&rhs).unwrap().l2_norm()
    };
    let (r1, r2) = (residual(0.1), residual(0.05));
    assert!(r2 < r1 && r1 / r2 > 3.4, "{r1} {r2}");
}
