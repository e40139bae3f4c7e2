use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use drivestyle::ann::{train, DEFAULT_HIDDEN};
use drivestyle::drivesim::{default_route, simulate, simulate_experiment, SimConfig, StyleProfile};
use drivestyle::ingest::parse_rmc;
use drivestyle::stats::{kruskal_wallis, posthoc_bonferroni};
use drivestyle::{ClassScheme, DrivingStyle, FeatureSet, Topology, TrainConfig};
use drivestyle_bench::{experiment, network, velocity_groups, RMC};

fn ann(c: &mut Criterion) {
    let mlp = network(&FeatureSet::Gyro7);
    let x = [0.5; 7];
    c.bench_function("forward_gyro7", |b| b.iter(|| mlp.forward(black_box(&x)).unwrap()));
    c.bench_function("backprop_gyro7", |b| b.iter(|| mlp.loss_and_gradient(black_box(&x), 1).unwrap()));

    let data = experiment();
    let fs = FeatureSet::Gyro7;
    let topo = Topology::for_task(&fs, ClassScheme::ThreeClass, &DEFAULT_HIDDEN);
    let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
    c.bench_function("train_epoch_experiment", |b| {
        b.iter(|| train(black_box(&data), &fs, ClassScheme::ThreeClass, &topo, &cfg).unwrap())
    });
}

fn stats(c: &mut Criterion) {
    let groups = velocity_groups();
    c.bench_function("kruskal_wallis_velocity", |b| b.iter(|| kruskal_wallis(black_box(&groups)).unwrap()));
    c.bench_function("dunn_bonferroni_velocity", |b| b.iter(|| posthoc_bonferroni(black_box(&groups)).unwrap()));
}

fn ingest(c: &mut Criterion) {
    c.bench_function("parse_rmc", |b| b.iter(|| parse_rmc(black_box(RMC)).unwrap()));
}

fn sim(c: &mut Criterion) {
    let cfg = SimConfig::new(default_route(1), StyleProfile::preset(DrivingStyle::Nor), 1);
    c.bench_function("simulate_nor_trip", |b| b.iter(|| simulate(black_box(&cfg)).unwrap()));
    let route = default_route(1);
    c.bench_function("simulate_experiment", |b| b.iter(|| simulate_experiment(black_box(&route), 1).unwrap()));
}

criterion_group!(benches, ann, stats, ingest, sim);
criterion_main!(benches);
