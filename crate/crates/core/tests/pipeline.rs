use drivestyle::ann::{load_model, save_model, train, DEFAULT_HIDDEN};
use drivestyle::drivesim::{default_route, simulate_experiment};
use drivestyle::eval::{confusion, random_split};
use drivestyle::ingest::{read_log, write_log};
use drivestyle::record::apply_scheme;
use drivestyle::{ClassScheme, FeatureSet, Topology, TrainConfig};

#[test]
fn simulate_persist_train_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("trace.csv");
    let data = simulate_experiment(&default_route(4), 4).unwrap();
    write_log(&data, &log).unwrap();
    let back = read_log(&log).unwrap();
    assert_eq!(back.len(), data.len());

    let (tr, va) = random_split(&back, 3000, 9).unwrap();
    let scheme = ClassScheme::TwoClassMerged;
    let fs = FeatureSet::Gyro7;
    let net = train(
        &tr,
        &fs,
        scheme,
        &Topology::for_task(&fs, scheme, &DEFAULT_HIDDEN),
        &TrainConfig::default().with_seed(2),
    )
    .unwrap();
    let model = dir.path().join("model.txt");
    save_model(&net, &model).unwrap();
    let loaded = load_model(&model).unwrap();
    assert_eq!(loaded, net);

    let cm = confusion(&loaded, &apply_scheme(&va, scheme).unwrap()).unwrap();
    assert_eq!(cm.total() as usize, va.len());
    assert!(cm.accuracy() > 0.7, "{cm}");
}

#[test]
fn confusion_rejects_labels_outside_the_scheme() {
    let data = simulate_experiment(&default_route(1), 1).unwrap();
    let (tr, va) = random_split(&data, 2000, 1).unwrap();
    let scheme = ClassScheme::TwoClassDropCon;
    let fs = FeatureSet::GyroNoGeoTime4;
    let cfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
    let net = train(&tr, &fs, scheme, &Topology::for_task(&fs, scheme, &DEFAULT_HIDDEN), &cfg).unwrap();
    assert!(matches!(confusion(&net, &va), Err(drivestyle::eval::EvalError::SchemeMismatch { .. })));
}
