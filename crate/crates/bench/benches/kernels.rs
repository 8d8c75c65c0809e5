use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ridgeline_bench::{two_mountain, X0};
use ridgeline_core::hamiltonian::{local_coeffs, LocalHamiltonian, OneSided};
use ridgeline_core::solver::{self, Stepper};
use ridgeline_core::trajectory::{integrate_deterministic, run_ensemble};
use ridgeline_core::{
    ControlField, DirectionSet, ExtMode, HamiltonianConfig, SlopeVector, SpeedModel,
};

fn numerical_hamiltonian(c: &mut Criterion) {
    let model = SpeedModel::default();
    let dirs = DirectionSet::new(64).unwrap();
    let mut coeffs = Vec::new();
    local_coeffs(SlopeVector::new(0.3, -0.1), &model, &dirs, &mut coeffs);
    let h = LocalHamiltonian::new(&coeffs);
    let d = OneSided::new(0.4, -0.7, 0.2, 0.9);
    let mut group = c.benchmark_group("godunov");
    for (name, mode) in [("exact", ExtMode::Exact), ("sampled16", ExtMode::Sampled)] {
        let cfg = HamiltonianConfig {
            ext_mode: mode,
            ..HamiltonianConfig::default()
        };
        group.bench_function(name, |b| b.iter(|| h.numerical(black_box(d), &cfg)));
    }
    group.finish();
}

fn time_step(c: &mut Criterion) {
    let model = SpeedModel::default();
    let mut group = c.benchmark_group("step");
    group.sample_size(20);
    for sigma in [0.0, 0.5] {
        let (mut cfg, field) = two_mountain(100);
        cfg.sigma = sigma;
        let stepper = Stepper::new(&cfg, &field, &model).unwrap();
        let prev = stepper.terminal();
        let mut out = vec![0.0; prev.len()];
        group.bench_with_input(
            BenchmarkId::new("two_mountain_100", sigma),
            &sigma,
            |b, _| b.iter(|| stepper.step(black_box(&prev), &mut out, 1).unwrap()),
        );
    }
    group.finish();
}

fn paths(c: &mut Criterion) {
    let model = SpeedModel::default();
    let (cfg, field) = two_mountain(60);
    let vf = solver::solve(&cfg, &field, &model).unwrap();
    let cf = ControlField::new(&vf, &field, &model).unwrap();
    let mut group = c.benchmark_group("path");
    group.sample_size(20);
    group.bench_function("deterministic", |b| {
        b.iter(|| integrate_deterministic(&cf, black_box(X0)).unwrap())
    });
    group.bench_function("ensemble_100", |b| {
        b.iter(|| run_ensemble(&cf, black_box(X0), 0.2, 100, 7).unwrap())
    });
    group.finish();
}

criterion_group!(benches, numerical_hamiltonian, time_step, paths);
criterion_main!(benches);
