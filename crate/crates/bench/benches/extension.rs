use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use meanx_core::{
    corollary_check, invariant_mean, iterative_extension_eval, parse_mean, AveragingMapping,
    EnvelopeEstimator, EnvelopeKind, FamilyWindow, GiniParams, IterationConfig,
};

fn point(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.37 * 2.9f64.powi(i as i32)).collect()
}

fn extension_by_arity(c: &mut Criterion) {
    let cfg = IterationConfig::default();
    let mut group = c.benchmark_group("iterative_extension");
    group.sample_size(10);
    for text in ["power:2", "qa:exp:0.5", "gini:1,-1"] {
        let m = parse_mean(text).unwrap();
        for n in 3..=5 {
            let x = point(n);
            group.bench_with_input(BenchmarkId::new(text, n), &x, |b, x| {
                b.iter(|| iterative_extension_eval(&m, black_box(x), &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn barycentric_invariant_mean(c: &mut Criterion) {
    let cfg = IterationConfig::default();
    let m = parse_mean("gini:2,-1").unwrap();
    let mut group = c.benchmark_group("invariant_mean");
    for p in [3, 6, 10] {
        let a = AveragingMapping::barycentric(&m, p - 1).unwrap();
        let x = point(p);
        group.bench_with_input(BenchmarkId::from_parameter(p), &x, |b, x| {
            b.iter(|| invariant_mean(&a, black_box(x), &cfg).unwrap())
        });
    }
    group.finish();
}

fn envelope_estimate(c: &mut Criterion) {
    let cfg = IterationConfig::default();
    let m = parse_mean("gini:2,-1").unwrap();
    let x = point(3);
    c.bench_function("envelope/local_lower_cold", |b| {
        b.iter(|| {
            let est = EnvelopeEstimator::new(m.clone(), FamilyWindow::default(), cfg).unwrap();
            est.estimate(black_box(&x), EnvelopeKind::LocalLower)
                .unwrap()
        })
    });
}

fn gini_comparison(c: &mut Criterion) {
    let cfg = IterationConfig::default();
    let (a, b) = (
        GiniParams::new(2.0, -1.0).unwrap(),
        GiniParams::new(1.0, -1.0).unwrap(),
    );
    let mut group = c.benchmark_group("corollary_check");
    group.sample_size(10);
    group.bench_function("outside_delta_2", |bench| {
        bench.iter(|| corollary_check(a, b, 20, 1, &cfg).unwrap())
    });
    group.bench_function("inside_delta_2", |bench| {
        bench.iter(|| corollary_check(b, a, 20, 1, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    extension_by_arity,
    barycentric_invariant_mean,
    envelope_estimate,
    gini_comparison
);
criterion_main!(benches);
