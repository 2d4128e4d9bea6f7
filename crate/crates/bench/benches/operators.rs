use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use rough_pdo::bounds::theorem1_quantity;
use rough_pdo::grid::{forward_transform, GridFn};
use rough_pdo::maximal::hl_maximal;
use rough_pdo::pdo::{apply, apply_adjoint, operator_norm, NormMethod};
use rough_pdo::symbols::random_symbol;

fn probe(n: usize) -> GridFn {
    GridFn::from_fn(1, n, |x| Complex64::new((7.0 * x[0]).sin(), (3.0 * x[0]).cos())).unwrap()
}

fn transforms(c: &mut Criterion) {
    let f = probe(4096);
    c.bench_function("forward_transform 4096", |b| b.iter(|| forward_transform(black_box(&f))));
    c.bench_function("hl_maximal 4096", |b| b.iter(|| hl_maximal(black_box(&f))));
}

fn operators(c: &mut Criterion) {
    let s = random_symbol(1, 512, 3, 1).unwrap();
    let f = probe(512);
    c.bench_function("apply 512", |b| b.iter(|| apply(black_box(&s), black_box(&f)).unwrap()));
    c.bench_function("apply_adjoint 512", |b| b.iter(|| apply_adjoint(black_box(&s), black_box(&f)).unwrap()));
    c.bench_function("theorem1_quantity 512", |b| b.iter(|| theorem1_quantity(black_box(&s)).unwrap()));
    let small = random_symbol(1, 128, 3, 2).unwrap();
    let mut group = c.benchmark_group("norms");
    group.sample_size(10);
    group.bench_function("dense 128", |b| b.iter(|| operator_norm(black_box(&small), NormMethod::Dense).unwrap()));
    group.bench_function("power 128", |b| b.iter(|| operator_norm(black_box(&small), NormMethod::Power).unwrap()));
    group.finish();
}

criterion_group!(benches, transforms, operators);
criterion_main!(benches);
