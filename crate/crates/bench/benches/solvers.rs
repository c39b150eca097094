use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cbm_benches::baseline_instance;
use cbm_core::{
    brute_force_two_stage, exact_multistage, heuristic_two_stage, solve_two_stage, HeuristicConfig,
};

fn bench_solve_two_stage(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_two_stage");
    for n in [10usize, 20, 50, 100, 200] {
        let instance = baseline_instance(42, n, 0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &instance, |b, inst| {
            b.iter(|| solve_two_stage(black_box(inst)).unwrap())
        });
    }
    group.finish();
}

fn bench_heuristic_two_stage(c: &mut Criterion) {
    let mut group = c.benchmark_group("heuristic_two_stage_j3_m100");
    for n in [50usize, 100, 200] {
        let instance = baseline_instance(42, n, 0);
        let config = HeuristicConfig {
            max_cardinality: 3,
            samples: 100,
            seed: 1,
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &instance, |b, inst| {
            b.iter(|| heuristic_two_stage(black_box(inst), &config).unwrap())
        });
    }
    group.finish();
}

fn bench_brute_force(c: &mut Criterion) {
    let mut group = c.benchmark_group("brute_force");
    for n in [8usize, 12, 16] {
        let instance = baseline_instance(42, n, 0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &instance, |b, inst| {
            b.iter(|| brute_force_two_stage(black_box(inst)).unwrap())
        });
    }
    group.finish();
}

fn bench_exact_multistage(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_multistage");
    group.sample_size(10);
    for (n, horizon) in [(2usize, 3usize), (3, 4)] {
        let instance = baseline_instance(42, n, 0).with_horizon(horizon).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("n{n}_T{horizon}")),
            &instance,
            |b, inst| b.iter(|| exact_multistage(black_box(inst)).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_solve_two_stage,
    bench_heuristic_two_stage,
    bench_brute_force,
    bench_exact_multistage
);
criterion_main!(benches);
