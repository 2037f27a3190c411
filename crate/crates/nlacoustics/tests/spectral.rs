use std::f64::consts::PI;

use nlacoustics::grid::{Axis, Field, Frame, Grid};
use nlacoustics::spectral::{dealias, project_mean_zero, spectral_antiderivative, spectral_derivative, Spectral};
use nlacoustics::{paf1, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line(points: usize, length: f64) -> Grid {
    Grid::new(vec![Axis::periodic("tau", length, points)], Frame::Kzk).unwrap()
}

/// Random mean-zero trigonometric polynomial: `(k, cos coeff, sin coeff)`.
fn random_modes(rng: &mut ChaCha8Rng, max_mode: usize, count: usize) -> Vec<(f64, f64, f64)> {
    (0..count)
        .map(|_| (rng.random_range(1..=max_mode) as f64, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn eval_modes(modes: &[(f64, f64, f64)], length: f64, x: f64) -> f64 {
    let w = 2.0 * PI / length;
    modes.iter().map(|&(k, a, b)| a * (k * w * x).cos() + b * (k * w * x).sin()).sum()
}

/// `∫₀^τ f + ∫₀^L (l/L) f dl` by composite trapezoid sums with one Richardson
/// step, on `refine` sub-intervals per grid cell.
fn quadrature_antiderivative(f: &dyn Fn(f64) -> f64, n: usize, length: f64, refine: usize) -> Vec<f64> {
    let pass = |r: usize| -> Vec<f64> {
        let m = n * r;
        let h = length / m as f64;
        let mut cumulative = vec![0.0; n];
        let mut acc = 0.0;
        let mut weighted = 0.0;
        let mut prev = f(0.0);
        for i in 1..=m {
            let x = i as f64 * h;
            let cur = f(x);
            acc += 0.5 * h * (prev + cur);
            weighted += 0.5 * h * ((x - h) * prev + x * cur) / length;
            prev = cur;
            if i % r == 0 && i / r < n {
                cumulative[i / r] = acc;
            }
        }
        cumulative.iter().map(|c| c + weighted).collect()
    };
    let coarse = pass(refine);
    let fine = pass(2 * refine);
    coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

#[test]
fn derivative_of_zero_is_zero() {
    let g = line(16, 2.0 * PI);
    let d = spectral_derivative(&Field::zeros(g, 1), "tau", 3).unwrap();
    assert_eq!(d.linf_norm(), 0.0);
}

#[test]
fn derivative_of_single_modes() {
    let g = line(64, 2.0 * PI);
    let f = Field::from_fn(g.clone(), |x| x[0].sin()).unwrap();
    let d1 = spectral_derivative(&f, "tau", 1).unwrap();
    let d2 = spectral_derivative(&f, "tau", 2).unwrap();
    for (p, (a, b)) in d1.values().iter().zip(d2.values()).enumerate() {
        let x = g.point_coords(p)[0];
        assert!((a - x.cos()).abs() <= 1e-12);
        assert!((b + x.sin()).abs() <= 1e-12);
    }
}

#[test]
fn derivative_errors_name_the_problem() {
    let g = Grid::new(vec![Axis::periodic("z", 1.0, 8), Axis::bounded("y", 1.0, 8)], Frame::Npe).unwrap();
    let f = Field::zeros(g, 1);
    assert!(matches!(spectral_derivative(&f, "q", 1), Err(Error::UnknownAxis(_))));
    assert!(matches!(spectral_derivative(&f, "y", 1), Err(Error::NonPeriodicAxis(_))));
}

#[test]
fn antiderivative_examples() {
    let g = line(32, 2.0 * PI);
    let zero = spectral_antiderivative(&Field::zeros(g.clone(), 1), "tau").unwrap();
    assert_eq!(zero.linf_norm(), 0.0);
    let f = Field::from_fn(g.clone(), |x| x[0].sin()).unwrap();
    let a = spectral_antiderivative(&f, "tau").unwrap();
    for (p, v) in a.values().iter().enumerate() {
        assert!((v + g.point_coords(p)[0].cos()).abs() <= 1e-13);
    }
}

#[test]
fn antiderivative_rejects_nonzero_mean() {
    let g = line(32, 2.0 * PI);
    let f = Field::from_fn(g, |x| 1.0 + x[0].sin()).unwrap();
    assert!(matches!(spectral_antiderivative(&f, "tau"), Err(Error::NonZeroMean { .. })));
}

#[test]
fn antiderivative_matches_quadrature_of_the_integral_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10 {
        let n = [64, 96, 128, 256][trial % 4];
        let length = rng.random_range(1.0..8.0);
        let modes = random_modes(&mut rng, n / 4, 6);
        let g = line(n, length);
        let f = Field::from_fn(g, |x| eval_modes(&modes, length, x[0])).unwrap();
        let spectral = spectral_antiderivative(&f, "tau").unwrap();
        let oracle = quadrature_antiderivative(&|x| eval_modes(&modes, length, x), n, length, 64);
        let diff: f64 = spectral.values().iter().zip(&oracle).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = oracle.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(diff <= 1e-8 * scale, "trial {trial}: {diff} vs {scale}");
    }
}

#[test]
fn mean_projection_examples() {
    let g = line(16, 2.0 * PI);
    let c = Field::from_fn(g.clone(), |_| 5.0).unwrap();
    assert!(project_mean_zero(&c, "tau").unwrap().linf_norm() <= 1e-14);
    let s = Field::from_fn(g.clone(), |x| x[0].sin()).unwrap();
    let shifted = Field::from_fn(g, |x| 2.0 + x[0].sin()).unwrap();
    let p = project_mean_zero(&shifted, "tau").unwrap();
    assert!(p.sub(&s).unwrap().linf_norm() <= 1e-14);
    assert!(project_mean_zero(&s, "tau").unwrap().sub(&s).unwrap().linf_norm() <= 1e-14);
}

#[test]
fn dealias_examples() {
    let g = line(24, 2.0 * PI);
    let low = Field::from_fn(g.clone(), |x| (3.0 * x[0]).cos() + (8.0 * x[0]).sin()).unwrap();
    assert!(dealias(&low).sub(&low).unwrap().linf_norm() <= 1e-13);
    let high = Field::from_fn(g, |x| (10.0 * x[0]).cos()).unwrap();
    assert!(dealias(&high).linf_norm() <= 1e-13);
}

#[test]
fn paf1_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(vec![Axis::periodic("x1", 2.0, 8), Axis::periodic("x2", 3.0, 4)], Frame::Physical).unwrap();
    let f = Field::from_fn(g, |x| (x[0] * 3.1).sin() * x[1].exp()).unwrap();
    let path = dir.path().join("f.paf1");
    paf1::write_file(&f, &path).unwrap();
    let back = paf1::read_file(&path).unwrap();
    assert_eq!(back, f);
}

fn band_limited() -> impl Strategy<Value = (usize, Vec<(f64, f64, f64)>)> {
    (prop::sample::select(vec![16usize, 32, 64]), prop::collection::vec((1u32..6, -1.0f64..1.0, -1.0f64..1.0), 1..5))
        .prop_map(|(n, m)| (n, m.into_iter().map(|(k, a, b)| (k as f64, a, b)).collect()))
}

proptest! {
    #[test]
    fn antiderivative_inverts_derivative((n, modes) in band_limited(), length in 0.5f64..10.0) {
        let g = line(n, length);
        let f = Field::from_fn(g, |x| eval_modes(&modes, length, x[0])).unwrap();
        let a = spectral_antiderivative(&f, "tau").unwrap();
        let back = spectral_derivative(&a, "tau", 1).unwrap();
        let scale = f.l2_norm().max(1e-300);
        prop_assert!(back.sub(&f).unwrap().l2_norm() <= 1e-10 * scale);
        let sp = Spectral::new(a.grid());
        prop_assert!(sp.max_line_mean(a.values(), 0) <= 1e-12 * (1.0 + a.linf_norm()));
    }

    #[test]
    fn derivative_is_linear((n, modes) in band_limited(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0, order in 1u32..4) {
        let g = line(n, 2.0 * PI);
        let f = Field::from_fn(g.clone(), |x| eval_modes(&modes, 2.0 * PI, x[0])).unwrap();
        let h = Field::from_fn(g.clone(), |x| (x[0]).cos().powi(2) - 0.5).unwrap();
        let comb = Field::scalar(g.clone(), f.values().iter().zip(h.values()).map(|(a, b)| alpha * a + beta * b).collect()).unwrap();
        let df = spectral_derivative(&f, "tau", order).unwrap();
        let dh = spectral_derivative(&h, "tau", order).unwrap();
        let dc = spectral_derivative(&comb, "tau", order).unwrap();
        for ((c, a), b) in dc.values().iter().zip(df.values()).zip(dh.values()) {
            prop_assert!((c - alpha * a - beta * b).abs() <= 1e-12 * (1.0 + c.abs()) * 10f64.powi(order as i32));
        }
    }

    #[test]
    fn parseval_holds(seed in 0u64..1000, n in prop::sample::select(vec![8usize, 16, 32])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::new(vec![Axis::periodic("x1", 1.7, n), Axis::periodic("x2", 0.6, 8)], Frame::Physical).unwrap();
        let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sp = Spectral::new(&g);
        let direct = nlacoustics::grid::l2_norm(&g, &v);
        prop_assert!((sp.spectral_l2_norm(&v) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn dealias_is_idempotent(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = line(24, 2.0 * PI);
        let f = Field::scalar(g.clone(), (0..24).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let once = dealias(&f);
        prop_assert!(dealias(&once).sub(&once).unwrap().linf_norm() <= 1e-14);
    }

    #[test]
    fn projected_mean_is_zero(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::new(vec![Axis::periodic("tau", 3.0, 16), Axis::periodic("y", 2.0, 8)], Frame::Kzk).unwrap();
        let f = Field::scalar(g.clone(), (0..g.len()).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
        let p = project_mean_zero(&f, "tau").unwrap();
        prop_assert!(Spectral::new(&g).max_line_mean(p.values(), 0) <= 1e-14);
    }
}
