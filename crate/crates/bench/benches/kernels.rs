use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polycalc_bench::{bench_matrix, bench_set};
use polycalc_core::dilation::specific_dilation;
use polycalc_core::funcalc::{polygonal_calculus, FuncalcOptions};
use polycalc_core::instances::stream_rng;
use polycalc_core::multivar::{supnorm_on_torus, MultiPoly};
use polycalc_core::polygonal::PointSetE;
use polycalc_core::taylor::a_coeffs_recursive;
use std::hint::black_box;

fn coefficients(c: &mut Criterion) {
    let mut group = c.benchmark_group("a_coeffs_recursive");
    for n in [2, 5] {
        let e = PointSetE::roots_of_unity(n, 0.1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &e, |b, e| {
            b.iter(|| a_coeffs_recursive(black_box(e), 1000))
        });
    }
    group.finish();
}

fn dilation(c: &mut Criterion) {
    let e = bench_set();
    let mut group = c.benchmark_group("specific_dilation");
    for dim in [2, 4, 8] {
        let t = bench_matrix(dim);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &t, |b, t| {
            b.iter(|| specific_dilation(black_box(t), &e, 20, 1e-8).unwrap())
        });
    }
    group.finish();
}

fn torus_sup(c: &mut Criterion) {
    let phi = MultiPoly::random(&mut stream_rng(1, 0), 2, 8);
    c.bench_function("supnorm_on_torus_d2_deg8", |b| {
        b.iter(|| supnorm_on_torus(black_box(&phi), 256).unwrap())
    });
}

fn contour(c: &mut Criterion) {
    let e = bench_set();
    let t = bench_matrix(6);
    let phi = MultiPoly::random(&mut stream_rng(2, 0), 1, 20);
    let opts = FuncalcOptions::default();
    c.bench_function("polygonal_calculus_dim6_deg20", |b| {
        b.iter(|| polygonal_calculus(black_box(&phi), &t, &e, 0.5, &opts).unwrap())
    });
}

criterion_group!(benches, coefficients, dilation, torus_sup, contour);
criterion_main!(benches);
