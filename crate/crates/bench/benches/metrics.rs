use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use flowdepth::circle::{global_bound_functional, CircleMap};
use flowdepth::l1_interp::{lp_oracle, min_weight, InterpProblem};
use flowdepth::relu1d::{distance, geodesic_length};
use flowdepth::so3::{d_l1_bounds, Rotation3};
use flowdepth::{MapSpec, SmoothMap};
use nalgebra::Vector3;

fn metric(c: &mut Criterion) {
    let id = MapSpec::identity();
    let mut g = c.benchmark_group("distance");
    for m in [SmoothMap::ExpMap, SmoothMap::Fig1, SmoothMap::Osc(8)] {
        let psi = MapSpec::Smooth(m);
        g.bench_with_input(BenchmarkId::from_parameter(m), &psi, |b, psi| {
            b.iter(|| distance(black_box(&id), black_box(psi)).unwrap())
        });
    }
    g.finish();

    let e = MapSpec::Smooth(SmoothMap::ExpMap);
    c.bench_function("geodesic_length k=16 n=1024", |b| {
        b.iter(|| geodesic_length(&id, &e, black_box(16), 1024).unwrap())
    });
}

fn interpolation(c: &mut Criterion) {
    let mut g = c.benchmark_group("min_weight");
    for n in [8usize, 32, 64] {
        let p = InterpProblem::from_fn(n, |x| (5.0 * x).sin() * x).unwrap();
        g.bench_with_input(BenchmarkId::new("closed_form", n), &p, |b, p| {
            b.iter(|| min_weight(black_box(p)))
        });
        g.bench_with_input(BenchmarkId::new("simplex", n), &p, |b, p| {
            b.iter(|| lp_oracle(black_box(p)).unwrap())
        });
    }
    g.finish();
}

fn groups(c: &mut Criterion) {
    let r = Rotation3::exp(Vector3::new(0.3, -1.1, 0.7));
    c.bench_function("so3 bounds", |b| {
        b.iter(|| d_l1_bounds(&Rotation3::identity(), black_box(&r)))
    });
    let w = CircleMap::warp(0.05, 1, 0.0).unwrap();
    c.bench_function("circle functional n=1024", |b| {
        b.iter(|| global_bound_functional(black_box(&w), &CircleMap::Identity, 1024, (1.0, 1.0)).unwrap())
    });
}

criterion_group!(benches, metric, interpolation, groups);
criterion_main!(benches);
