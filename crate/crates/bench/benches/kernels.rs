use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vortexlp::coalgebra::{integrate_reduced, lie_poisson_jacobian, lie_poisson_rhs};
use vortexlp::dynamics::{self, vortex_rhs};
use vortexlp::stability::{energy_casimir_certificate, sweep, Axis, SweepFamily, SweepGrid};
use vortexlp::{ChargeConfig, IntegratorSettings};
use vortexlp_bench::{centred_triangle, spiral, spiral_point};

fn vector_fields(c: &mut Criterion) {
    let mut g = c.benchmark_group("vector_field");
    for n in [2, 4, 8, 16] {
        let (cfg, z) = spiral(n, 0.1);
        g.bench_with_input(BenchmarkId::new("vortex_rhs", n), &n, |b, _| {
            b.iter(|| vortex_rhs(&cfg, black_box(&z)).unwrap())
        });
        let (cfg, mu) = spiral_point(n, 0.1);
        g.bench_with_input(BenchmarkId::new("lie_poisson_rhs", n), &n, |b, _| {
            b.iter(|| lie_poisson_rhs(&cfg, black_box(&mu)).unwrap())
        });
    }
    g.finish();
}

fn integration(c: &mut Criterion) {
    let mut g = c.benchmark_group("integrate_t10");
    g.sample_size(20);
    let settings = IntegratorSettings::with_tolerance(1e-10);
    let (cfg, z) = spiral(4, 0.1);
    g.bench_function("full_n4", |b| {
        b.iter(|| dynamics::integrate(&cfg, black_box(&z), (0.0, 10.0), &settings).unwrap())
    });
    let (cfg, mu) = spiral_point(4, 0.1);
    g.bench_function("reduced_n4", |b| {
        b.iter(|| integrate_reduced(&cfg, black_box(&mu), (0.0, 10.0), &settings).unwrap())
    });
    g.finish();
}

fn stability(c: &mut Criterion) {
    let (cfg, mu) = centred_triangle();
    c.bench_function("lie_poisson_jacobian_n4", |b| {
        b.iter(|| lie_poisson_jacobian(&cfg, black_box(&mu)).unwrap())
    });
    c.bench_function("energy_casimir_certificate_n4", |b| {
        b.iter(|| energy_casimir_certificate(&cfg, black_box(&mu)).unwrap())
    });
    let template = ChargeConfig::uniform(4, 0.1).unwrap();
    let grid = SweepGrid { param1: Axis::new(0.01, 1.0, 10), param2: Axis::new(0.05, 0.95, 10) };
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_function("centred_triangle_10x10", |b| {
        b.iter(|| sweep(&template, SweepFamily::EquilateralCenter4, black_box(&grid)))
    });
    g.finish();
}

criterion_group!(benches, vector_fields, integration, stability);
criterion_main!(benches);
