//! Sequential vs rayon-parallel execution of a small ε sweep.

use criterion::{criterion_group, criterion_main, Criterion};
use nlacoustics_experiments::config::{ExperimentConfig, Horizon, StepSpec};
use nlacoustics_experiments::presets::{InitialCondition, Preset};
use nlacoustics_experiments::study::run_members;
use nlacoustics_experiments::{Execution, StudyPair};

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        name: "bench".into(),
        pair: StudyPair::KuznetsovWestervelt,
        coeff: Default::default(),
        eps_list: vec![0.08, 0.06, 0.04, 0.03],
        horizon: Horizon::OverEps { constant: 0.5 },
        grid: Default::default(),
        initial: InitialCondition::new(Preset::TravellingWave),
        delta: None,
        seed: 0,
        steps: StepSpec { step: 0.05, ..Default::default() },
        samples: 8,
        fractions: vec![0.5, 1.0],
        transient: 0.2,
        sobolev_order: 0,
    }
}

fn bench_sweep(c: &mut Criterion) {
    let cfg = sweep_config();
    let mut group = c.benchmark_group("eps_sweep");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| run_members(&cfg, Execution::Sequential).unwrap()));
    group.bench_function("parallel", |b| b.iter(|| run_members(&cfg, Execution::Parallel { threads: None }).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);
