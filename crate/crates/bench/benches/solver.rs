use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mr3mix::bisect::bisect_eigenvalues;
use mr3mix::harness::Family;
use mr3mix::transforms::{dstqds, Arithmetic};
use mr3mix::precision::Real;
use mr3mix::{solve, DoubleQuad, Precision, SingleDouble, SolverConfig};
use mr3mix_bench::{definite_rep, matrix};
use std::hint::black_box;

fn bench_solve_mode<P: Precision>(c: &mut Criterion, name: &str) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    let config = SolverConfig::new(P::MODE);
    for family in [Family::Uniform, Family::OneTwoOne, Family::Wilkinson] {
        for n in [101, 501] {
            let t = matrix::<P>(family, n);
            group.bench_with_input(BenchmarkId::new(family.name(), n), &t, |b, t| {
                b.iter(|| solve::<P>(black_box(t), &config).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    bench_solve_mode::<SingleDouble>(c, "solve/single-double");
    bench_solve_mode::<DoubleQuad>(c, "solve/double-quad");
}

fn bench_bisection(c: &mut Criterion) {
    let mut group = c.benchmark_group("bisect/one_two_one_501");
    let rep = definite_rep::<SingleDouble>(Family::OneTwoOne, 501);
    let idx: Vec<usize> = (0..501).step_by(10).collect();
    group.bench_function("narrow", |b| {
        b.iter(|| bisect_eigenvalues::<SingleDouble>(&rep, black_box(&idx), 1e-3, Arithmetic::Narrow))
    });
    group.bench_function("wide", |b| {
        b.iter(|| bisect_eigenvalues::<SingleDouble>(&rep, black_box(&idx), 1e-3, Arithmetic::Wide))
    });
    let rep = definite_rep::<DoubleQuad>(Family::OneTwoOne, 501);
    group.bench_function("double-quad wide", |b| {
        b.iter(|| bisect_eigenvalues::<DoubleQuad>(&rep, black_box(&idx), 1e-3, Arithmetic::Wide))
    });
    group.finish();
}

fn bench_dstqds(c: &mut Criterion) {
    let mut group = c.benchmark_group("dstqds/n1001");
    let rep = definite_rep::<SingleDouble>(Family::Clement, 1001);
    let tau = rep.spdiam() * 0.5;
    group.bench_function("f64", |b| b.iter(|| dstqds(black_box(&rep), tau)));
    let rep = definite_rep::<DoubleQuad>(Family::Clement, 1001);
    let tau = rep.spdiam().mul_pow2(-1);
    group.bench_function("double-double", |b| b.iter(|| dstqds(black_box(&rep), tau)));
    group.finish();
}

criterion_group!(benches, bench_solve, bench_bisection, bench_dstqds);
criterion_main!(benches);
