use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use khessian::bvp::count_solutions_on;
use khessian::{critical_solutions, integrate_ivp, make_params, mu_star, picard_maximal, PicardOptions};

fn ivp(c: &mut Criterion) {
    let spiral = make_params(13, 2, 5.0, None).unwrap();
    let node = make_params(11, 1, 8.0, None).unwrap();
    c.bench_function("integrate_ivp spiral s<=1e12", |b| {
        b.iter(|| integrate_ivp(black_box(&spiral), 1e12, 1e-10).unwrap())
    });
    c.bench_function("integrate_ivp node s<=1e6", |b| {
        b.iter(|| integrate_ivp(black_box(&node), 1e6, 1e-10).unwrap())
    });
}

fn multiplicity(c: &mut Criterion) {
    let spiral = make_params(13, 2, 5.0, None).unwrap();
    let profile = integrate_ivp(&spiral, 1e12, 1e-10).unwrap();
    let limit = spiral.c_nk() * spiral.lambda_tilde();
    c.bench_function("count_solutions spiral at limit", |b| {
        b.iter(|| count_solutions_on(black_box(&profile), limit).unwrap())
    });
}

fn picard(c: &mut Criterion) {
    let node = make_params(11, 1, 8.0, None).unwrap();
    let mut group = c.benchmark_group("picard_maximal");
    group.sample_size(20);
    for lambda in [0.1, 2.0] {
        group.bench_function(format!("node lambda={lambda}"), |b| {
            b.iter(|| picard_maximal(&node, black_box(lambda), PicardOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn closed_form(c: &mut Criterion) {
    let lambda = 0.5 * mu_star(5, 1);
    c.bench_function("critical_solutions n=5 k=1", |b| {
        b.iter(|| critical_solutions(black_box(lambda), 5, 1).unwrap())
    });
}

criterion_group!(benches, ivp, multiplicity, picard, closed_form);
criterion_main!(benches);
