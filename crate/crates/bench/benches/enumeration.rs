use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use framekit::oracle::kernel_pair_search;
use framekit::properties::{complement_property, is_full_spark, spark, weak_pr_verdict, SearchBudget};
use framekit::reconstruction::{reconstruct, LiftedSystem};
use framekit_bench::{gaussian_frame, test_signal};

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("complement_property");
    for n in [8, 12, 16] {
        let f = gaussian_frame(4, n, n as u64);
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| complement_property(black_box(f)))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("spark");
    for n in [8, 12, 16] {
        let f = gaussian_frame(5, n, n as u64);
        group.bench_with_input(BenchmarkId::new("spark", n), &f, |b, f| b.iter(|| spark(black_box(f))));
        group.bench_with_input(BenchmarkId::new("full_spark", n), &f, |b, f| {
            b.iter(|| is_full_spark(black_box(f)))
        });
    }
    group.finish();
}

fn lift(c: &mut Criterion) {
    let f = gaussian_frame(5, 12, 1);
    c.bench_function("lift/build_m5_n12", |b| b.iter(|| LiftedSystem::build(black_box(&f))));
    let y = f.measure(&test_signal(5)).unwrap();
    c.bench_function("lift/reconstruct_m5_n12", |b| b.iter(|| reconstruct(black_box(&f), black_box(&y))));
}

fn oracle(c: &mut Criterion) {
    let f = gaussian_frame(4, 5, 2);
    c.bench_function("oracle/kernel_search_m4_n5_grid1000", |b| {
        b.iter(|| kernel_pair_search(black_box(&f), 1000, 0))
    });
    let g = gaussian_frame(4, 6, 3);
    let budget = SearchBudget::default();
    c.bench_function("oracle/verdict_m4_n6", |b| b.iter(|| weak_pr_verdict(black_box(&g), &budget)));
}

criterion_group!(benches, enumeration, lift, oracle);
criterion_main!(benches);
