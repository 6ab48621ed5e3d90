use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use momentmap::instance::Counterexample;
use momentmap::{MomentContext, Summation};

fn variants(delta: f64) -> Vec<(&'static str, MomentContext)> {
    let ex = Counterexample::new().unwrap();
    vec![
        ("sequential", ex.context(delta).unwrap()),
        (
            "pairwise-parallel",
            ex.context(delta)
                .unwrap()
                .with_summation(Summation::Pairwise)
                .with_parallel(true),
        ),
    ]
}

fn bench_quadrature(c: &mut Criterion) {
    let ex = Counterexample::new().unwrap();
    let lambda = ex.lambda0().unwrap();
    let mut group = c.benchmark_group("moment-map");
    group.sample_size(10);
    for (name, ctx) in variants(1e-3) {
        group.bench_with_input(BenchmarkId::new("h_map", name), &ctx, |b, ctx| {
            b.iter(|| ctx.h_map(black_box(&lambda)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("jacobian", name), &ctx, |b, ctx| {
            b.iter(|| ctx.jacobian_matrix(black_box(&lambda)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("second_derivative_array", name), &ctx, |b, ctx| {
            b.iter(|| ctx.second_derivative_array(black_box(&lambda)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_quadrature);
criterion_main!(benches);
