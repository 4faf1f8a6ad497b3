//! Period expansion and mutation search, sequential against parallel.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use mmlp::corpus;
use mmlp::laurent::classical_period_with;
use mmlp::par::ExecMode;
use mmlp::rigidity::{candidate_mutations_with, MutationSearchBudget};

const CASES: &[(&str, usize)] = &[
    ("reflexive-1/P3", 16),
    ("reflexive-4312/V4", 10),
    ("example-sublattice/f", 12),
];

fn periods(c: &mut Criterion) {
    let mut group = c.benchmark_group("classical_period");
    group.sample_size(10);
    for &(key, order) in CASES {
        let f = corpus::get(key).unwrap().polynomial().unwrap();
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{mode:?}"), key), &f, |b, f| {
                b.iter(|| classical_period_with(black_box(f), order, mode).unwrap())
            });
        }
    }
    group.finish();
}

fn mutation_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("candidate_mutations");
    group.sample_size(10);
    let budget = MutationSearchBudget::default();
    let f = corpus::get("reflexive-428/B2").unwrap().polynomial().unwrap();
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        group.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| candidate_mutations_with(black_box(&f), &budget, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, periods, mutation_search);
criterion_main!(benches);
