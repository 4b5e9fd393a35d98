use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use levy_chaos::chaos::{c_poly_closed, c_poly_recursive, expand_with_moments};
use levy_chaos::evaluate::{reconstruct_exact, reconstruct_grid};
use levy_chaos::ortho::orthogonalize;
use levy_chaos::Rational;
use levy_chaos_bench::{fixture, gamma_moments, gamma_moments_exact, gamma_path};

fn c_poly(c: &mut Criterion) {
    let mv = gamma_moments_exact(12);
    let mut g = c.benchmark_group("c_poly");
    for k in [6, 12] {
        g.bench_with_input(BenchmarkId::new("recursive", k), &k, |b, &k| {
            b.iter(|| c_poly_recursive(black_box(k), &mv).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("closed", k), &k, |b, &k| {
            b.iter(|| c_poly_closed(black_box(k), &mv).unwrap())
        });
    }
    g.finish();
}

fn expand(c: &mut Criterion) {
    let exact = gamma_moments_exact(12);
    let float = gamma_moments(12);
    let mut g = c.benchmark_group("expand");
    for n in [4, 8, 12] {
        g.bench_with_input(BenchmarkId::new("rational", n), &n, |b, &n| {
            b.iter(|| expand_with_moments(black_box(n), &exact).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("f64", n), &n, |b, &n| {
            b.iter(|| expand_with_moments(black_box(n), &float).unwrap())
        });
    }
    g.finish();
}

fn ortho(c: &mut Criterion) {
    let exact = gamma_moments_exact(16);
    let float = gamma_moments(16);
    c.bench_function("ortho/rational/8", |b| b.iter(|| orthogonalize(&exact, black_box(8)).unwrap()));
    c.bench_function("ortho/f64/8", |b| b.iter(|| orthogonalize(&float, black_box(8)).unwrap()));
}

fn eval_grid(c: &mut Criterion) {
    let path = gamma_path(1e-4);
    let mv = gamma_moments(9);
    let mut g = c.benchmark_group("eval_grid");
    g.sample_size(10);
    for n in [4, 9] {
        let exp = expand_with_moments(n, &mv).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| reconstruct_grid(&exp, &path, 0.0, None).unwrap())
        });
    }
    g.finish();
}

fn eval_exact(c: &mut Criterion) {
    let path = fixture(6);
    let (t0, t) = (Rational::new(1.into(), 10.into()), Rational::from_integer(1.into()));
    let mut g = c.benchmark_group("eval_exact");
    for n in [3, 6] {
        let exp = expand_with_moments(n, &path.moments).unwrap();
        g.bench_with_input(BenchmarkId::new("rational", n), &n, |b, _| {
            b.iter(|| reconstruct_exact(&exp, &path, &t0, &t, None).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, c_poly, expand, ortho, eval_grid, eval_exact);
criterion_main!(benches);
