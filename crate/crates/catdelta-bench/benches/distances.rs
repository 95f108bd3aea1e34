//! Gather-form pairwise distances against the dense indicator-matrix
//! product, and the cross-distance kernel used by KNN.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use catdelta::synth::random_dataset;
use catdelta::{
    cross_distances, naive_pairwise_dense, pairwise_distances, MeasureSpec, UnseenPolicy,
};

fn bench_gather_vs_dense(c: &mut Criterion) {
    let mut group = c.benchmark_group("pairwise_distances");
    group.sample_size(10);
    for n in [200usize, 1000] {
        let ds = random_dataset(n, &[4; 10], 7);
        let delta = MeasureSpec::parse_name("tvd").unwrap().build(&ds).unwrap();
        group.bench_with_input(BenchmarkId::new("gather", n), &n, |b, _| {
            b.iter(|| {
                black_box(pairwise_distances(black_box(&ds), &delta, UnseenPolicy::Error).unwrap())
            })
        });
        group.bench_with_input(BenchmarkId::new("dense", n), &n, |b, _| {
            b.iter(|| black_box(naive_pairwise_dense(black_box(&ds), &delta).unwrap()))
        });
    }
    group.finish();
}

fn bench_cross_distances(c: &mut Criterion) {
    let mut group = c.benchmark_group("cross_distances");
    group.sample_size(10);
    let train = random_dataset(800, &[4; 10], 11);
    let test = random_dataset(200, &[4; 10], 13);
    // Same schema by construction (identical shapes and level names).
    let delta = MeasureSpec::parse_name("matching").unwrap().build(&train).unwrap();
    group.bench_function("train800_test200", |b| {
        b.iter(|| {
            black_box(cross_distances(&train, &test, &delta, UnseenPolicy::Error).unwrap())
        })
    });
    group.finish();
}

criterion_group!(benches, bench_gather_vs_dense, bench_cross_distances);
criterion_main!(benches);
