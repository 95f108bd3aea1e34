//! Closed-form total variation distance vs the 2^q - 2 partition
//! enumeration, across profile lengths.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use catdelta::{ahmad_dey_oracle, phi_tvd};
use catdelta_bench::profile_pairs;

fn bench_tvd_vs_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("profile_dissimilarity");
    group.sample_size(20);
    for q in [4usize, 8, 12, 16] {
        let pairs = profile_pairs(q, 16, 42);
        group.bench_with_input(BenchmarkId::new("tvd", q), &pairs, |b, pairs| {
            b.iter(|| {
                let mut acc = 0.0;
                for (x, y) in pairs {
                    acc += phi_tvd(black_box(x), black_box(y)).unwrap();
                }
                acc
            })
        });
        group.bench_with_input(BenchmarkId::new("oracle", q), &pairs, |b, pairs| {
            b.iter(|| {
                let mut acc = 0.0;
                for (x, y) in pairs {
                    acc += ahmad_dey_oracle(black_box(x), black_box(y)).unwrap();
                }
                acc
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_tvd_vs_oracle);
criterion_main!(benches);
