use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use secsel_core::rng::rng_from_seed;
use secsel_core::{
    generate_dataset, sample_channels, sop_direct, train, Dataset, ModelKind, SystemConfig, TrainConfig,
};

fn data(k: usize, m: usize, seed: u64) -> Dataset {
    generate_dataset(&SystemConfig::iid(k, 0.8, 8.0), m, seed).unwrap()
}

fn simulation(c: &mut Criterion) {
    let cfg = SystemConfig::iid(12, 0.8, 8.0);
    let mut rng = rng_from_seed(1);
    c.bench_function("sample_channels K=12", |b| b.iter(|| sample_channels(black_box(&cfg), &mut rng)));
    let cfg4 = SystemConfig::iid(4, 0.8, 8.0);
    c.bench_function("generate_dataset K=4 m=1000", |b| b.iter(|| generate_dataset(&cfg4, 1000, black_box(2))));
    c.bench_function("sop_direct K=4 n=10000", |b| b.iter(|| sop_direct(&cfg4, 10_000, black_box(3))));
}

fn prediction(c: &mut Criterion) {
    let train_set = data(4, 2000, 10);
    let queries = data(4, 1000, 11).features();
    let tc = TrainConfig {
        epochs: 1,
        svm_subsample: 500,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("predict 1000 K=4");
    group.sample_size(20);
    for kind in ModelKind::ALL {
        let (model, _) = train(kind, &train_set, &tc).unwrap();
        group.bench_function(kind.name(), |b| b.iter(|| model.predict_batch(black_box(&queries))));
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let train_set = data(4, 1000, 20);
    let tc = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("one epoch on 1000 K=4");
    group.sample_size(10);
    for kind in [ModelKind::Mlp, ModelKind::Lstm] {
        group.bench_function(kind.name(), |b| b.iter(|| train(kind, black_box(&train_set), &tc)));
    }
    group.finish();
}

criterion_group!(benches, simulation, prediction, training);
criterion_main!(benches);
