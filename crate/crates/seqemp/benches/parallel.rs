//! Parallel vs sequential replication loops on the Monte Carlo kernels.
//!
//! With the default `parallel` feature, `map_reps` runs on the rayon pool
//! and `map_reps_serial` on one thread; the benchmarks compare the two on
//! identical workloads (results are bit-identical by construction).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use seqemp::empirical::Centering;
use seqemp::limit::{gamma_analytic_iid, LimitSimulator};
use seqemp::ottaviani::PartialSumFamily;
use seqemp::par::{map_reps, map_reps_serial};
use seqemp::{eval_sequential, EvaluationGrid, SequenceSpec, ULattice};

fn bench_partial_sum_reps(c: &mut Criterion) {
    let spec = SequenceSpec::iid(1).unwrap();
    let lattice = ULattice::regular(1, 21).unwrap();
    let family = PartialSumFamily::singletons(lattice);
    let n = 128;
    let per_rep = |r: u64| {
        let sample = spec.generate_stream(n, 42, r).unwrap();
        let eval = family.evaluator(&sample).unwrap();
        eval.sup_partial_sums(0, n).unwrap()
    };

    let mut group = c.benchmark_group("partial_sum_supremum");
    for reps in [64u64, 256] {
        group.bench_with_input(BenchmarkId::new("parallel", reps), &reps, |b, &reps| {
            b.iter(|| black_box(map_reps(reps, per_rep)))
        });
        group.bench_with_input(BenchmarkId::new("serial", reps), &reps, |b, &reps| {
            b.iter(|| black_box(map_reps_serial(reps, per_rep)))
        });
    }
    group.finish();
}

fn bench_limit_draws(c: &mut Criterion) {
    let spec = SequenceSpec::iid(1).unwrap();
    let lattice = ULattice::regular(1, 21).unwrap();
    let kernel = gamma_analytic_iid(&lattice, &spec).unwrap();
    let s_points: Vec<f64> = (0..=64).map(|j| j as f64 / 64.0).collect();
    let sim = LimitSimulator::new(&kernel, &s_points).unwrap();
    let per_rep = |r: u64| sim.draw(7, r).values[(32, 10)];

    let mut group = c.benchmark_group("limit_field_draws");
    for reps in [128u64, 512] {
        group.bench_with_input(BenchmarkId::new("parallel", reps), &reps, |b, &reps| {
            b.iter(|| black_box(map_reps(reps, per_rep)))
        });
        group.bench_with_input(BenchmarkId::new("serial", reps), &reps, |b, &reps| {
            b.iter(|| black_box(map_reps_serial(reps, per_rep)))
        });
    }
    group.finish();
}

fn bench_field_evaluation(c: &mut Criterion) {
    let spec = SequenceSpec::iid(2).unwrap();
    let grid = EvaluationGrid::regular(32, 2, 11).unwrap();
    let per_rep = |r: u64| {
        let sample = spec.generate_stream(512, 9, r).unwrap();
        let field = eval_sequential(&sample, Centering::TrueCdf, &grid).unwrap();
        seqemp::sup_norm(&field)
    };

    let mut group = c.benchmark_group("sequential_field_eval");
    group.bench_function("parallel_64", |b| b.iter(|| black_box(map_reps(64, per_rep))));
    group.bench_function("serial_64", |b| {
        b.iter(|| black_box(map_reps_serial(64, per_rep)))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_partial_sum_reps,
    bench_limit_draws,
    bench_field_evaluation
);
criterion_main!(benches);
