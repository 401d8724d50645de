use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use toral_recurrence::coding::diameter_ratio_check;
use toral_recurrence::dimension::{dim_grid, transition_report};
use toral_recurrence::estimate::{brute_force_oracle, count_constrained_windows, ConstraintSpec};
use toral_recurrence::partition::catalog;
use toral_recurrence::shift::Sft;
use toral_recurrence::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn oracle(c: &mut Criterion) {
    let s = Sft::full_shift(2, 2.0).unwrap();
    let spec = ConstraintSpec::new(0.2, 4, 2.0);
    let mut g = c.benchmark_group("brute_force_oracle");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, "full2 m=8"), &exec, |b, &e| {
            b.iter(|| brute_force_oracle(&s, &spec, 8, e).unwrap())
        });
    }
    g.finish();
}

fn witness_union(c: &mut Criterion) {
    let s = Sft::golden_mean((1.0 + 5f64.sqrt()) / 2.0).unwrap();
    let spec = ConstraintSpec::new(0.3, 8, s.lambda());
    let mut g = c.benchmark_group("count_constrained_windows");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, "golden N=8 m=12"), &exec, |b, &e| {
            b.iter(|| count_constrained_windows(&s, &spec, 12, e).unwrap())
        });
    }
    g.finish();
}

fn cylinders(c: &mut Criterion) {
    let (_, p) = catalog("cat").unwrap();
    let mut g = c.benchmark_group("diameter_ratio_check");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, "cat 64 samples m=12"), &exec, |b, &e| {
            b.iter(|| diameter_ratio_check(&p, 64, 12, 7, e).unwrap())
        });
    }
    g.finish();
}

fn profiles(c: &mut Criterion) {
    let mut g = c.benchmark_group("dimension_profiles");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, "grid 5e-4"), &exec, |b, &e| {
            b.iter(|| dim_grid(0.0005, 1.0, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new(name, "transitions 1e-5"), &exec, |b, &e| {
            b.iter(|| transition_report(1e-5, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, oracle, witness_union, cylinders, profiles);
criterion_main!(benches);
