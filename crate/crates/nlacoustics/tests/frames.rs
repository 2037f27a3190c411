use std::f64::consts::PI;

use nlacoustics::frames::{
    evaluate_profile_in_physical, kzk_npe_bijection, map_coordinates, transport_kzk_to_npe, BijectionDerivatives,
    BijectionDirection, Direction, FrameMap, ParaxialKind, TauZ,
};
use nlacoustics::grid::{Axis, Field, Frame, Grid};
use nlacoustics::spectral::spectral_derivative;
use nlacoustics::Error;
use proptest::prelude::*;

#[test]
fn maps_fix_the_origin() {
    for kind in [ParaxialKind::Kzk, ParaxialKind::Npe] {
        let fm = FrameMap::new(kind, 1.7, 0.3, 3).unwrap();
        assert_eq!(map_coordinates(&fm, Direction::Forward, &[0.0; 4]).unwrap(), vec![0.0; 4]);
    }
    let o = kzk_npe_bijection(BijectionDirection::KzkToNpe, TauZ { tau: 0.0, z: 0.0 }, 3.0, 0.2);
    assert_eq!((o.tau, o.z), (0.0, 0.0));
}

#[test]
fn frame_map_validates_parameters() {
    assert!(FrameMap::new(ParaxialKind::Kzk, 0.0, 0.1, 1).is_err());
    assert!(FrameMap::new(ParaxialKind::Npe, 1.0, 1.0, 1).is_err());
    assert!(FrameMap::new(ParaxialKind::Npe, 1.0, 0.5, 4).is_err());
}

#[test]
fn zero_profile_maps_to_zero() {
    let fm = FrameMap::new(ParaxialKind::Npe, 1.0, 0.1, 1).unwrap();
    let prof = Field::zeros(Grid::new(vec![Axis::periodic("z", 4.0, 16)], Frame::Npe).unwrap(), 1);
    let phys = Grid::new(vec![Axis::periodic("x1", 4.0, 16)], Frame::Physical).unwrap();
    let f = evaluate_profile_in_physical(&prof, &fm, &phys, &[("t", 0.0)], &[("tau", 0.0)]).unwrap();
    assert_eq!(f.linf_norm(), 0.0);
}

#[test]
fn kzk_profile_on_a_plane_matches_the_composition() {
    // Φ(τ, y) recorded at z = z0, sampled on the physical plane x1 = z0/ε.
    let (c, eps, z0) = (1.3, 0.04, 0.2);
    let ly = 6.0;
    let fm = FrameMap::new(ParaxialKind::Kzk, c, eps, 2).unwrap();
    let profile_fn = |tau: f64, y: f64| (tau).sin() * (2.0 * PI * y / ly).cos() + 0.3 * (2.0 * tau).cos();
    let prof_grid =
        Grid::new(vec![Axis::periodic("tau", 2.0 * PI, 32), Axis::periodic("y", ly, 16)], Frame::Kzk).unwrap();
    let prof = Field::from_fn(prof_grid, |x| profile_fn(x[0], x[1])).unwrap();
    let x1 = z0 / eps;
    let phys = Grid::new(vec![Axis::periodic("t", 3.7, 20), Axis::periodic("x2", 9.0, 12)], Frame::Physical).unwrap();
    let got = evaluate_profile_in_physical(&prof, &fm, &phys, &[("x1", x1)], &[("z", z0)]).unwrap();
    for (p, v) in got.values().iter().enumerate() {
        let x = phys.point_coords(p);
        let expect = profile_fn(x[0] - x1 / c, eps.sqrt() * x[1]);
        assert!((v - expect).abs() <= 1e-10, "{v} vs {expect}");
    }
    // Off the recorded plane the profile is undefined.
    let err = evaluate_profile_in_physical(&prof, &fm, &phys, &[("x1", x1 + 1.0)], &[("z", z0)]);
    assert!(matches!(err, Err(Error::OutOfRange { .. })));
}

#[test]
fn bounded_axis_rejects_out_of_range_points() {
    let fm = FrameMap::new(ParaxialKind::Npe, 1.0, 0.25, 2).unwrap();
    let g = Grid::new(vec![Axis::periodic("z", 2.0, 8), Axis::bounded("y", 1.0, 8)], Frame::Npe).unwrap();
    let prof = Field::from_fn(g, |x| x[1]).unwrap();
    let inside = Grid::new(vec![Axis::periodic("x1", 2.0, 8), Axis::bounded("x2", 2.0, 6)], Frame::Physical).unwrap();
    let f = evaluate_profile_in_physical(&prof, &fm, &inside, &[("t", 0.0)], &[("tau", 0.0)]).unwrap();
    // Monotone cubic reproduces linear data.
    for (p, v) in f.values().iter().enumerate() {
        assert!((v - 0.5 * inside.point_coords(p)[1]).abs() <= 1e-12);
    }
    let outside = Grid::new(vec![Axis::periodic("x1", 2.0, 8), Axis::bounded("x2", 4.0, 6)], Frame::Physical).unwrap();
    assert!(evaluate_profile_in_physical(&prof, &fm, &outside, &[("t", 0.0)], &[("tau", 0.0)]).is_err());
}

#[test]
fn transported_derivatives_follow_the_correspondence() {
    // I(τ, z) = sin(τ + 0.3z) + 0.5cos(2τ − 0.1z) at z = 0.7.
    let c = 1.6;
    let z = 0.7;
    let g = Grid::new(vec![Axis::periodic("tau", 2.0 * PI, 32)], Frame::Kzk).unwrap();
    let i = Field::from_fn(g.clone(), |x| (x[0] + 0.3 * z).sin() + 0.5 * (2.0 * x[0] - 0.1 * z).cos()).unwrap();
    let i_tau = spectral_derivative(&i, "tau", 1).unwrap();
    let i_z = Field::from_fn(g, |x| 0.3 * (x[0] + 0.3 * z).cos() + 0.05 * (2.0 * x[0] - 0.1 * z).sin()).unwrap();
    let d = BijectionDerivatives::new(c);
    let xi = transport_kzk_to_npe(&i, c).unwrap();
    let xi_z = spectral_derivative(&xi, "z", 1).unwrap();
    let expect_z = transport_kzk_to_npe(&i_tau, c).unwrap();
    for (a, b) in xi_z.values().iter().zip(expect_z.values()) {
        assert!((a - d.z_npe_per_tau_kzk * b).abs() <= 1e-8 * (1.0 + b.abs()));
    }
    // ∂τ_N ξ at the transported point is c·∂z I there.
    let expect_tau = transport_kzk_to_npe(&i_z, c).unwrap();
    let dt = 1e-5;
    let xi_at = |zk: f64| {
        let shifted =
            Field::from_fn(i.grid().clone(), |x| (x[0] + 0.3 * zk).sin() + 0.5 * (2.0 * x[0] - 0.1 * zk).cos())
                .unwrap();
        transport_kzk_to_npe(&shifted, c).unwrap()
    };
    // τ_N = z_K / c ⇒ z_K = c τ_N.
    let (plus, minus) = (xi_at(z + c * dt), xi_at(z - c * dt));
    for ((p, m), e) in plus.values().iter().zip(minus.values()).zip(expect_tau.values()) {
        let fd = (p - m) / (2.0 * dt);
        assert!((fd - d.tau_npe_per_z_kzk * e).abs() <= 1e-8);
    }
}

proptest! {
    #[test]
    fn paraxial_maps_round_trip(
        kzk in any::<bool>(), c in 0.2f64..5.0, eps in 1e-4f64..0.9,
        p in prop::collection::vec(-50.0f64..50.0, 3)
    ) {
        let kind = if kzk { ParaxialKind::Kzk } else { ParaxialKind::Npe };
        let fm = FrameMap::new(kind, c, eps, 2).unwrap();
        let fwd = map_coordinates(&fm, Direction::Forward, &p).unwrap();
        let back = map_coordinates(&fm, Direction::Inverse, &fwd).unwrap();
        // Cancellation in `t − x1/c` (or `x1 − ct`) loses digits relative to the largest term.
        let scale = (1.0 + p.iter().fold(0.0f64, |m, v| m.max(v.abs()))) * (1.0 + c + 1.0 / c);
        for (a, b) in back.iter().zip(&p) {
            prop_assert!((a - b).abs() <= 4e-16 * scale);
        }
    }

    #[test]
    fn bijection_round_trips(c in 0.2f64..5.0, eps in 1e-4f64..0.9, tau in -10.0f64..10.0, z in -10.0f64..10.0) {
        let q = kzk_npe_bijection(BijectionDirection::KzkToNpe, TauZ { tau, z }, c, eps);
        let b = kzk_npe_bijection(BijectionDirection::NpeToKzk, q, c, eps);
        prop_assert!((b.tau - tau).abs() <= 1e-14 * (1.0 + tau.abs()) * 4.0);
        prop_assert!((b.z - z).abs() <= 1e-14 * (1.0 + z.abs() + c * tau.abs()));
    }
}
