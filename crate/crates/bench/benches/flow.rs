use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use grainflow_core::flow::{rhs, sine_profile, step};
use grainflow_core::grid::derivative;
use grainflow_core::{FlowParams, SigmaModel, State};

fn spectral_derivative(c: &mut Criterion) {
    let mut group = c.benchmark_group("derivative");
    for n in [64, 256, 1024] {
        let u = sine_profile(n, 0.1, 3).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| derivative(black_box(u.values())))
        });
    }
    group.finish();
}

fn flow_rhs_and_step(c: &mut Criterion) {
    let m = SigmaModel::default();
    let mut group = c.benchmark_group("flow");
    for n in [64, 256] {
        let s = State::new(sine_profile(n, 0.1, 1).unwrap(), 0.3);
        let p = FlowParams::at_cfl(1.0, 1.0, n, 1.0, &m, 0.3);
        group.bench_with_input(BenchmarkId::new("rhs", n), &s, |b, s| {
            b.iter(|| rhs(black_box(s), &m, &p))
        });
        group.bench_with_input(BenchmarkId::new("rk4_step", n), &s, |b, s| {
            b.iter(|| step(black_box(s), &m, &p).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, spectral_derivative, flow_rhs_and_step);
criterion_main!(benches);
