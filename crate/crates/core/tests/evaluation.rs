use cvforest::synthetic::{random_dataset, SuiteKind};
use cvforest::*;

fn config_for(ds: &Dataset, n: usize, seed: u64) -> InductionConfig {
    InductionConfig { n, seed, measure: Measure::default_for(ds.target_kind()), ..InductionConfig::default() }
}

#[test]
fn forest_estimate_equals_serial_estimate() {
    for seed in 0..30u64 {
        let ds = random_dataset(SuiteKind::Discrete, seed);
        let n = [2, 3, 5, 10][seed as usize % 4];
        let config = config_for(&ds, n, seed);
        let folds = config.folds(&ds).unwrap();
        let forest = grow_forest(&ds, &folds, &config).unwrap();
        let parallel = cross_validation_estimate(&forest, &ds, &folds).unwrap();
        let serial = run_serial_cross_validation(&ds, &folds, &config).unwrap();
        assert_eq!(parallel, estimate_from_trees(&serial.folds, &ds, &folds).unwrap(), "seed {seed}");
    }
}

#[test]
fn aggregate_is_pooled_accuracy() {
    let ds = random_dataset(SuiteKind::Discrete, 3);
    let config = config_for(&ds, 5, 3);
    let folds = config.folds(&ds).unwrap();
    let report = cross_validation_estimate(&grow_forest(&ds, &folds, &config).unwrap(), &ds, &folds).unwrap();
    let correct: u64 = report.folds.iter().map(|f| f.correct.unwrap()).sum();
    assert_eq!(report.examples, ds.len());
    assert_eq!(report.folds.iter().map(|f| f.size).sum::<usize>(), ds.len());
    assert!((report.aggregate - correct as f64 / ds.len() as f64).abs() < 1e-15);
    for f in &report.folds {
        let confusion = f.confusion.as_ref().unwrap();
        let diagonal: u64 = (0..confusion.len()).map(|c| confusion[c][c]).sum();
        assert_eq!(diagonal, f.correct.unwrap());
    }
}

#[test]
fn regression_estimate_is_mse() {
    let ds = random_dataset(SuiteKind::Regression, 11);
    let config = config_for(&ds, 3, 11);
    let folds = config.folds(&ds).unwrap();
    let report = cross_validation_estimate(&grow_forest(&ds, &folds, &config).unwrap(), &ds, &folds).unwrap();
    assert_eq!(report.metric, "mse");
    let total: f64 = report.folds.iter().map(|f| f.squared_error.unwrap()).sum();
    assert!((report.aggregate - total / ds.len() as f64).abs() < 1e-12);
}

#[test]
fn estimate_rejects_foreign_folds() {
    let ds = random_dataset(SuiteKind::Discrete, 5);
    let config = config_for(&ds, 3, 5);
    let folds = config.folds(&ds).unwrap();
    let forest = grow_forest(&ds, &folds, &config).unwrap();
    let other = assign_folds(&ds, 3, 99, false).unwrap();
    assert!(cross_validation_estimate(&forest, &ds, &other).is_err());
}

#[test]
fn stable_concept_is_learned() {
    let ds = generate_synthetic(Regime::Stable, 2000, 10, 4).unwrap();
    let config = InductionConfig { n: 10, ..InductionConfig::default() };
    let folds = config.folds(&ds).unwrap();
    let report = cross_validation_estimate(&grow_forest(&ds, &folds, &config).unwrap(), &ds, &folds).unwrap();
    assert_eq!(report.aggregate, 1.0);
}
