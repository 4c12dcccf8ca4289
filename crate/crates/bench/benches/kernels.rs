use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use critfpp_bench::{bernoulli, field, uniform, SEED};
use critfpp_core::circuits::max_disjoint_closed_circuits;
use critfpp_core::estimators::{arm_event, ArmEventSpec, Geometry};
use critfpp_core::passage::point_to_box_ladder;
use critfpp_core::weights::sample_field;
use critfpp_core::WeightKind;

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_field");
    for n in [64u32, 256] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| sample_field(&uniform(), black_box(n), SEED).unwrap())
        });
    }
    g.finish();
}

fn ladder(c: &mut Criterion) {
    let mut g = c.benchmark_group("point_to_box_ladder");
    g.sample_size(20);
    let f = field(&uniform(), 256);
    for (name, kind) in [("bernoulli", WeightKind::Bernoulli), ("general", WeightKind::General)] {
        g.bench_function(name, |b| b.iter(|| point_to_box_ladder(black_box(&f), kind)));
    }
    g.finish();
}

fn peeling(c: &mut Criterion) {
    let mut g = c.benchmark_group("max_disjoint_closed_circuits");
    g.sample_size(20);
    for n in [32u32, 128] {
        let f = field(&bernoulli(), n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| max_disjoint_closed_circuits(black_box(&f), n).unwrap())
        });
    }
    g.finish();
}

fn arms(c: &mut Criterion) {
    let mut g = c.benchmark_group("arm_event");
    let f = field(&bernoulli(), 16);
    for (name, arm) in [
        ("full_6", ArmEventSpec::alternating(6, Geometry::Full, 2, 16).unwrap()),
        ("half_5", ArmEventSpec::alternating(5, Geometry::Half, 2, 16).unwrap()),
        ("three_quarter_3", ArmEventSpec::alternating(3, Geometry::ThreeQuarter, 2, 16).unwrap()),
    ] {
        g.bench_function(name, |b| b.iter(|| arm_event(black_box(&f), &arm).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, sampling, ladder, peeling, arms);
criterion_main!(benches);
