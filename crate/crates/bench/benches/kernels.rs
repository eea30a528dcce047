use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use qlab_core::mean_inequality::sweep;
use qlab_core::{
    classify, classify_all_equivalent, spherical_average, verify_lemma31, ConditionKind, ExtremalMap, MonotoneMap,
    RadialField,
};

fn inverses(c: &mut Criterion) {
    let exp = MonotoneMap::exp_power(1.0, 1.5, 0.3).unwrap();
    c.bench_function("ln_inverse_at_log exp_power", |b| {
        b.iter(|| black_box(&exp).ln_inverse_at_log(black_box(12.5)))
    });
}

fn classifier(c: &mut Criterion) {
    let exp = MonotoneMap::exp_power(1.0, 1.0, 0.0).unwrap();
    let square = MonotoneMap::power(1.0, 2.0).unwrap();
    c.bench_function("classify T42 exp", |b| b.iter(|| classify(black_box(&exp), ConditionKind::t42(2))));
    c.bench_function("classify all equivalent t^2", |b| {
        b.iter(|| classify_all_equivalent(black_box(&square), 1.0))
    });
}

fn extremal(c: &mut Criterion) {
    let square = MonotoneMap::power(1.0, 2.0).unwrap();
    let mut group = c.benchmark_group("extremal");
    group.sample_size(20);
    group.bench_function("build 4096", |b| b.iter(|| ExtremalMap::build(black_box(&square), 2, 4096, 1e-6)));
    let map = ExtremalMap::build(&square, 2, 4096, 1e-6).unwrap();
    group.bench_function("eval", |b| b.iter(|| map.eval(black_box(&[0.3, 0.4]))));
    group.finish();
}

fn mean_inequality(c: &mut Criterion) {
    let k = RadialField::power(3, 1.2, -0.6).unwrap();
    let phi = MonotoneMap::power(1.0, 2.0).unwrap();
    c.bench_function("verify power field", |b| b.iter(|| verify_lemma31(black_box(&k), &phi, 1.5)));
    let lin = RadialField::linear(1.0, vec![0.2, 0.1, -0.3]).unwrap();
    c.bench_function("spherical mean of phi(K), sphere", |b| {
        b.iter(|| lin.spherical_mean_of(black_box(0.5), |v| phi.eval(v)))
    });
    c.bench_function("spherical average, linear", |b| b.iter(|| spherical_average(&lin, black_box(0.5))));
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("20 trials", |b| b.iter(|| sweep(black_box(5), 20)));
    group.finish();
}

criterion_group!(benches, inverses, classifier, extremal, mean_inequality);
criterion_main!(benches);
