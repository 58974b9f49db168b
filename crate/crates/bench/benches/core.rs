use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use rws_core::analysis::xi_statistic;
use rws_core::{
    cascade, sample_draws, sample_field, scaling_filter, seq_norm, CapPolicy, PriorSpec, SpaceSpec,
    TemplateDistribution, Truncation, WaveletSystem,
};

fn prior() -> PriorSpec {
    PriorSpec::besov(-1.0, -1.5, -1.5, 0.0, TemplateDistribution::Gaussian)
}

fn wavelets(c: &mut Criterion) {
    let filters = scaling_filter(10).unwrap();
    c.bench_function("cascade D10 depth 10", |b| {
        b.iter(|| cascade(black_box(&filters), 10).unwrap())
    });
    let system = WaveletSystem::daubechies(10, 10, 1).unwrap();
    let truncation = Truncation::new(
        1,
        10,
        CapPolicy::Covering {
            radius: 25.0,
            support: 20,
        },
    )
    .unwrap();
    let field = sample_field(&prior(), &truncation, 0).unwrap();
    let grid: Vec<Vec<f64>> = (0..=1000).map(|i| vec![-25.0 + 0.05 * i as f64]).collect();
    c.bench_function("synthesize 1001 points J=10", |b| {
        b.iter(|| system.synthesize(black_box(&field), &grid).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let t1 = Truncation::new(1, 12, CapPolicy::Default).unwrap();
    c.bench_function("sample_field d=1 J=12", |b| {
        b.iter(|| sample_field(&prior(), &t1, black_box(7)).unwrap())
    });
    let t2 = Truncation::new(2, 5, CapPolicy::Default).unwrap();
    c.bench_function("sample_field d=2 J=5", |b| {
        b.iter(|| sample_field(&prior(), &t2, black_box(7)).unwrap())
    });
    let field = sample_field(&prior(), &t1, 7).unwrap();
    let spec = SpaceSpec::unweighted(1, 0.0, 2.0, 2.0).unwrap();
    c.bench_function("seq_norm d=1 J=12", |b| {
        b.iter(|| seq_norm(black_box(&field), &spec).unwrap())
    });
    let draws = sample_draws(
        &prior(),
        &Truncation::new(1, 8, CapPolicy::Default).unwrap(),
        7,
    )
    .unwrap();
    c.bench_function("xi_statistic d=1 J=8", |b| {
        b.iter(|| xi_statistic(black_box(&draws), 2.0).unwrap())
    });
}

criterion_group!(benches, wavelets, sampling);
criterion_main!(benches);
