use std::f64::consts::PI;

use nlacoustics::grid::{Axis, Field, Frame, Grid};
use nlacoustics::solvers::{solve_kzk, ModelKind, ModelState, StepControl};
use nlacoustics::ModelCoefficients;
use nlacoustics_experiments::config::{Delta, DeltaKeyword, Horizon};
use nlacoustics_experiments::fit::{envelope_constants_agree, median, EnvelopeFit};
use nlacoustics_experiments::presets::{
    band_limited_perturbation, gaussian_beam, polynomial_amplitude, InitialCondition, Preset, WATER_EPS,
};
use nlacoustics_experiments::report::{
    errors_csv, parse_errors_csv, read_report, MemberResult, SeriesPoint, SlopeFit, Verdict,
};
use nlacoustics_experiments::{
    decay_fit, decay_fit_series, emit_report, gronwall_envelope_check, l2_error, power_law_slope, scaling_study,
    scaling_study_with, Comparable, EnvelopeForm, Execution, ExperimentConfig, ExperimentError, Report, StudyPair,
};
use proptest::prelude::*;

fn line(n: usize) -> Grid {
    Grid::new(vec![Axis::periodic("x1", 2.0 * PI, n)], Frame::Physical).unwrap()
}

fn wave_state(u: Field, ut: Field) -> ModelState {
    ModelState { model: ModelKind::Kuznetsov, evol: 0.0, primary: u, velocity: Some(ut) }
}

fn paraxial_state(i: Field) -> ModelState {
    ModelState { model: ModelKind::Kzk, evol: 0.0, primary: i, velocity: None }
}

const MINIMAL: &str = r#"{
    "name": "minimal",
    "pair": "ns-kuznetsov",
    "eps_list": [0.04, 0.02],
    "horizon": {"c_over_eps": 0.5},
    "initial": {"preset": "travelling_wave"}
}"#;

fn minimal() -> ExperimentConfig {
    ExperimentConfig::from_json(MINIMAL).unwrap()
}

// ---- l2_error ----

#[test]
fn identical_states_have_zero_error() {
    let g = line(32);
    let u = Field::from_fn(g.clone(), |x| x[0].sin() + 0.3 * (2.0 * x[0]).cos()).unwrap();
    let s = wave_state(u.clone(), u.clone());
    assert_eq!(l2_error(Comparable::Model(&s), Comparable::Model(&s)).unwrap(), 0.0);
}

#[test]
fn sine_against_zero_has_norm_root_pi() {
    let g = line(64);
    let a = paraxial_state(Field::from_fn(g.clone(), |x| x[0].sin()).unwrap());
    let b = paraxial_state(Field::zeros(g, 1));
    let e = l2_error(Comparable::Model(&a), Comparable::Model(&b)).unwrap();
    assert!((e - PI.sqrt()).abs() <= 1e-12 * PI.sqrt(), "{e}");
}

#[test]
fn energy_norm_of_a_mode_matches_closed_form() {
    // e = sin(kx), e_t = cos(kx): ‖e_t‖² + ‖e_x‖² = π + k²π.
    let g = line(32);
    let k = 3.0;
    let u = wave_state(
        Field::from_fn(g.clone(), |x| (k * x[0]).sin()).unwrap(),
        Field::from_fn(g.clone(), |x| (k * x[0]).cos()).unwrap(),
    );
    let zero = wave_state(Field::zeros(g.clone(), 1), Field::zeros(g, 1));
    let e = l2_error(Comparable::Model(&u), Comparable::Model(&zero)).unwrap();
    let want = (PI * (1.0 + k * k)).sqrt();
    assert!((e - want).abs() <= 1e-12 * want);
}

#[test]
fn mismatched_grids_and_kinds_are_rejected() {
    let a = paraxial_state(Field::zeros(line(16), 1));
    let b = paraxial_state(Field::zeros(line(32), 1));
    assert!(l2_error(Comparable::Model(&a), Comparable::Model(&b)).is_err());
    let w = wave_state(Field::zeros(line(16), 1), Field::zeros(line(16), 1));
    assert!(l2_error(Comparable::Model(&a), Comparable::Model(&w)).is_err());
}

proptest! {
    #[test]
    fn l2_error_obeys_the_triangle_inequality(
        coeffs in proptest::collection::vec(-1.0f64..1.0, 18)
    ) {
        let g = line(32);
        let make = |c: &[f64]| {
            paraxial_state(
                Field::from_fn(g.clone(), |x| {
                    c.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * x[0] + k as f64).sin()).sum()
                })
                .unwrap(),
            )
        };
        let (a, b, c) = (make(&coeffs[0..6]), make(&coeffs[6..12]), make(&coeffs[12..18]));
        let d = |p: &ModelState, q: &ModelState| l2_error(Comparable::Model(p), Comparable::Model(q)).unwrap();
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-12);
    }

    #[test]
    fn slope_fit_recovers_power_laws(
        exponent in 0.5f64..4.0, scale in 1e-3f64..1e3,
        eps in proptest::collection::vec(1e-4f64..0.5, 2..6)
    ) {
        let mut eps = eps;
        eps.sort_by(|a, b| b.total_cmp(a));
        eps.dedup_by(|a, b| (*a / *b - 1.0).abs() < 1e-2);
        prop_assume!(eps.len() >= 2);
        let errors: Vec<f64> = eps.iter().map(|e| scale * e.powf(exponent)).collect();
        let slope = power_law_slope(&eps, &errors).unwrap();
        prop_assert!((slope - exponent).abs() <= 1e-8, "{slope} vs {exponent}");
    }

    #[test]
    fn envelope_fit_recovers_synthetic_constants(
        a in 1e-3f64..10.0, b in -1.0f64..1.0, eps in 1e-3f64..0.5
    ) {
        let series: Vec<(f64, f64)> = (0..=20).map(|i| {
            let z = 0.1 * i as f64;
            (z, a * z * (b * z).exp())
        }).collect();
        let fit = gronwall_envelope_check(&series, eps, EnvelopeForm::LinearTimesExponential).unwrap();
        prop_assert!((fit.c1 - 2.0 * b).abs() <= 1e-6 * (2.0 * b).abs().max(1e-3));
        prop_assert!((fit.c2 - 2.0 * a / eps).abs() <= 1e-6 * 2.0 * a / eps);
        prop_assert!(fit.within_envelope);
    }

    #[test]
    fn perturbation_has_the_requested_size(
        delta in 0.0f64..0.1, seed in 0u64..1000
    ) {
        let g = Grid::new(vec![Axis::periodic("x1", 2.0 * PI, 32), Axis::periodic("x2", 5.0, 16)], Frame::Physical).unwrap();
        let p = band_limited_perturbation(&g, 2, delta, seed).unwrap();
        let norm = p.iter().map(|v| nlacoustics::grid::l2_norm(&g, v).powi(2)).sum::<f64>().sqrt();
        prop_assert!((norm - delta).abs() <= 1e-12 * (1.0 + delta));
        prop_assert_eq!(&p, &band_limited_perturbation(&g, 2, delta, seed).unwrap());
    }
}

// ---- fits ----

#[test]
fn median_handles_odd_even_and_nonfinite() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    assert_eq!(median(&[f64::NAN, 1.0]), Some(1.0));
    assert_eq!(median(&[]), None);
}

#[test]
fn slope_is_undefined_for_zero_errors() {
    assert_eq!(power_law_slope(&[0.1, 0.05], &[0.0, 0.0]), None);
    assert_eq!(power_law_slope(&[0.1], &[1.0]), None);
}

#[test]
fn zero_series_fits_zero_envelope_and_passes() {
    let series: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, 0.0)).collect();
    let fit = gronwall_envelope_check(&series, 0.01, EnvelopeForm::LinearTimesExponential).unwrap();
    assert_eq!(fit.c2, 0.0);
    assert!(fit.within_envelope);
}

#[test]
fn short_series_is_rejected() {
    let series = [(0.0, 0.0), (1.0, 0.1), (2.0, 0.2)];
    assert!(matches!(
        gronwall_envelope_check(&series, 0.01, EnvelopeForm::LinearTimesExponential),
        Err(ExperimentError::InvalidInput(_))
    ));
}

#[test]
fn error_at_the_origin_breaks_the_envelope() {
    let series = [(0.0, 1e-3), (1.0, 0.1), (2.0, 0.2), (3.0, 0.3)];
    let fit = gronwall_envelope_check(&series, 0.01, EnvelopeForm::LinearTimesExponential).unwrap();
    assert!(!fit.within_envelope);
    assert!(fit.max_ratio.is_finite());
}

#[test]
fn envelope_constants_spread_is_checked() {
    let fit = |c1: f64, c2: f64| EnvelopeFit { eps: 0.1, c1, c2, max_ratio: 1.0, within_envelope: true };
    assert!(envelope_constants_agree(&[fit(1.0, 2.0), fit(1.1, 2.2), fit(0.9, 1.9)]));
    assert!(!envelope_constants_agree(&[fit(1.0, 2.0), fit(1.5, 2.0), fit(1.0, 2.0)]));
    assert!(!envelope_constants_agree(&[]));
}

#[test]
fn exact_exponential_decay_is_recovered() {
    let series: Vec<(f64, f64)> = (0..=50).map(|i| (0.1 * i as f64, 2.0 * (-0.3 * 0.1 * i as f64).exp())).collect();
    let fit = decay_fit_series(&series, 0.2).unwrap();
    assert!((fit.rate + 0.3).abs() <= 1e-10, "{}", fit.rate);
    assert!(fit.passed);
    let growing: Vec<(f64, f64)> = series.iter().map(|&(z, n)| (z, 1.0 / n)).collect();
    assert!(!decay_fit_series(&growing, 0.2).unwrap().passed);
}

fn beam_trajectory(nu: f64) -> (ModelCoefficients, Vec<ModelState>) {
    let m = ModelCoefficients::new(1.0, 1.0, 1.4, nu, 0.1).unwrap();
    let ly = 12.0;
    let g = Grid::new(vec![Axis::periodic("tau", 2.0 * PI, 32), Axis::periodic("y", ly, 16)], Frame::Kzk).unwrap();
    let i0 = Field::from_fn(g, |x| gaussian_beam(x[0], x[1] - ly / 2.0)).unwrap();
    let traj = solve_kzk(&m, &i0, 2.0, &StepControl::new(0.02).with_substeps(5), Default::default(), None).unwrap();
    (m, traj)
}

#[test]
fn viscous_beam_decays() {
    let (m, traj) = beam_trajectory(0.1);
    let fit = decay_fit(&traj, &m, 0, 0.2).unwrap();
    assert!(fit.rate < 0.0 && fit.passed, "{fit:?}");
}

#[test]
fn inviscid_trajectory_is_rejected() {
    let (m, traj) = beam_trajectory(0.0);
    assert!(matches!(decay_fit(&traj, &m, 0, 0.2), Err(ExperimentError::InvalidInput(_))));
}

// ---- presets ----

#[test]
fn presets_match_their_closed_forms() {
    for &(tau, y) in &[(0.3, 0.0), (1.7, 0.5), (-2.0, -0.9), (4.0, 1.0), (0.8, 1.5), (2.2, -3.0)] {
        assert_eq!(gaussian_beam(tau, y), -(-y * y).exp() * f64::sin(tau));
        let poly = if f64::abs(y) <= 1.0 { -(1.0 - y * y).powi(2) * f64::sin(tau) } else { 0.0 };
        assert_eq!(polynomial_amplitude(tau, y), poly);
        assert_eq!(InitialCondition::new(Preset::GaussianBeam).value(tau, y), gaussian_beam(tau, y));
        assert_eq!(InitialCondition::new(Preset::PolynomialAmplitude).value(tau, y), polynomial_amplitude(tau, y));
    }
}

#[test]
fn water_preset_fixes_eps() {
    let mut cfg = minimal();
    cfg.initial = InitialCondition::new(Preset::Water);
    let cfg = cfg.resolved().unwrap();
    assert_eq!(cfg.eps_list, vec![WATER_EPS]);
    assert_eq!(WATER_EPS, 1e-5);
}

#[test]
fn sampled_beam_is_centred_on_the_transverse_period() {
    let ly = 8.0;
    let g = Grid::new(vec![Axis::periodic("tau", 2.0 * PI, 16), Axis::periodic("y", ly, 16)], Frame::Kzk).unwrap();
    let f = InitialCondition::new(Preset::GaussianBeam).sample(&g, 0.1).unwrap();
    for p in 0..g.len() {
        let x = g.point_coords(p);
        assert_eq!(f.values()[p], gaussian_beam(x[0], x[1] - ly / 2.0));
    }
}

// ---- configuration ----

#[test]
fn config_rejects_unknown_keys() {
    let text = MINIMAL.replace("\"name\"", "\"colour\": 1, \"name\"");
    assert!(matches!(ExperimentConfig::from_json(&text), Err(ExperimentError::Config(_))));
}

#[test]
fn config_enforces_eps_invariants() {
    let mut cfg = minimal();
    cfg.eps_list = vec![0.02, 0.04];
    assert!(cfg.validate().is_err());
    cfg.eps_list = vec![1.0, 0.5];
    assert!(cfg.validate().is_err());
    cfg.eps_list = vec![0.04, 0.02];
    cfg.delta = Some(Delta::Fixed(0.03));
    assert!(cfg.validate().is_err());
    cfg.delta = Some(Delta::Fixed(0.02));
    assert!(cfg.validate().is_ok());
}

#[test]
fn delta_keyword_tracks_eps() {
    let text = MINIMAL.replace("\"name\"", "\"delta\": \"eps\", \"name\"");
    let cfg = ExperimentConfig::from_json(&text).unwrap();
    assert_eq!(cfg.delta, Some(Delta::MatchEps(DeltaKeyword::Eps)));
    assert_eq!(cfg.delta.unwrap().at(0.02), 0.02);
}

#[test]
fn unsupported_pair_and_horizons_are_rejected() {
    let mut cfg = minimal();
    cfg.pair = StudyPair::NsKzk;
    let err = cfg.validate().unwrap_err().to_string();
    assert!(err.contains("ns-kzk"), "{err}");
    let mut cfg = minimal();
    cfg.pair = StudyPair::KuznetsovKzk;
    assert!(cfg.validate().is_err());
    cfg.horizon = Horizon::Fixed(1.0);
    assert!(cfg.validate().is_ok());
}

#[test]
fn config_hash_is_stable_and_sensitive() {
    let a = minimal();
    assert_eq!(a.hash(), minimal().hash());
    assert_eq!(a.hash().len(), 64);
    let mut b = minimal();
    b.seed = 1;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn members_share_the_sample_spacing() {
    let cfg = minimal();
    assert_eq!(cfg.member_samples(0.04), cfg.samples);
    assert_eq!(cfg.member_samples(0.02), 2 * cfg.samples);
}

#[test]
fn pair_tags_round_trip() {
    for tag in ["ns-kuznetsov", "kuznetsov-kzk", "kuznetsov-westervelt", "npe-npe", "kzk-decay"] {
        assert_eq!(StudyPair::from_tag(tag).unwrap().tag(), tag);
    }
    assert!(StudyPair::from_tag("kzk-kuznetsov").is_err());
}

// ---- studies ----

#[test]
fn self_comparison_is_exact_and_slope_is_flagged() {
    let mut cfg = minimal();
    cfg.pair = StudyPair::KuznetsovKuznetsov;
    cfg.samples = 4;
    let report = scaling_study(&cfg).unwrap();
    for m in &report.members {
        assert!(m.series.iter().all(|p| p.error <= 1e-13));
    }
    assert!(report.median_slope.is_none());
    assert!(report.flags.iter().any(|f| f.contains("slope undefined")), "{:?}", report.flags);
    assert!(report.passed());
}

#[test]
fn verdicts_name_acceptance_criteria() {
    let mut cfg = minimal();
    cfg.samples = 4;
    let report = scaling_study(&cfg).unwrap();
    assert!(!report.verdicts.is_empty());
    for v in &report.verdicts {
        let n: usize = v.criterion.strip_prefix('A').and_then(|s| s.parse().ok()).unwrap();
        assert!((1..=12).contains(&n));
    }
    assert_eq!(report.config_hash, cfg.hash());
    assert_eq!(report.runtime.member_seconds.len(), cfg.eps_list.len());
}

#[test]
fn sequential_and_parallel_sweeps_agree() {
    let mut cfg = minimal();
    cfg.samples = 4;
    let seq = scaling_study_with(&cfg, Execution::Sequential).unwrap();
    let par = scaling_study_with(&cfg, Execution::from_env()).unwrap();
    assert_eq!(seq.members, par.members);
    assert_eq!(errors_csv(&seq).unwrap(), errors_csv(&par).unwrap());
    let eps: Vec<f64> = par.members.iter().map(|m| m.eps).collect();
    assert_eq!(eps, cfg.eps_list);
}

// ---- report artifacts ----

fn sample_report() -> Report {
    Report {
        name: "sample".into(),
        pair: "ns-kuznetsov".into(),
        config_hash: "ab".repeat(32),
        seed: 7,
        members: vec![MemberResult {
            eps: 0.1,
            delta: 0.0,
            span: 1.0,
            series: vec![
                SeriesPoint { evol: 0.0, error: 0.0 },
                SeriesPoint { evol: 1.0 / 3.0, error: 0.1 + 0.2 },
                SeriesPoint { evol: 2.0 / 3.0, error: std::f64::consts::E * 1e-300 },
                SeriesPoint { evol: 1.0, error: 5e-324 },
            ],
            failure: None,
            numerical_failure: false,
            envelope: None,
            decay: None,
            source_norm: None,
            sup_dtau: None,
        }],
        slopes: vec![SlopeFit { fraction: 1.0, evol: 1.0, eps: vec![0.1], errors: vec![0.3], slope: None }],
        median_slope: None,
        flags: vec!["slope undefined".into()],
        verdicts: vec![Verdict::new("A6", false, "example".into())],
        ..Default::default()
    }
}

#[test]
fn empty_report_is_valid_json_with_empty_series() {
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&Report::default(), dir.path()).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&files.json).unwrap()).unwrap();
    assert_eq!(v["members"], serde_json::json!([]));
    assert!(files.svg.is_none());
    assert_eq!(std::fs::read_to_string(&files.csv).unwrap(), "eps,evol,l2_error\n");
}

#[test]
fn report_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let r = sample_report();
    let files = emit_report(&r, dir.path()).unwrap();
    assert_eq!(read_report(&files.json).unwrap(), r);
    assert!(files.svg.is_some());
}

#[test]
fn csv_reparses_bit_exactly() {
    let r = sample_report();
    let rows = parse_errors_csv(&errors_csv(&r).unwrap()).unwrap();
    assert_eq!(rows.len(), r.members[0].series.len());
    for (row, p) in rows.iter().zip(&r.members[0].series) {
        assert_eq!(row.0.to_bits(), 0.1f64.to_bits());
        assert_eq!(row.1.to_bits(), p.evol.to_bits());
        assert_eq!(row.2.to_bits(), p.error.to_bits());
    }
}

#[test]
fn emitted_bytes_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let r = sample_report();
    let (fa, fb) = (emit_report(&r, a.path()).unwrap(), emit_report(&r, b.path()).unwrap());
    for (x, y) in [(fa.json, fb.json), (fa.csv, fb.csv), (fa.svg.unwrap(), fb.svg.unwrap())] {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}
