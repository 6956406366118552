//! Per-part statistics at the root, and fold statistics derived from them
//! by subtraction instead of a fresh pass per fold.

use cvforest::instrument::Counters;
use cvforest::splits::{accumulate_fold_statistics, derive_training_statistics, enumerate_tests, QualityTable};
use cvforest::*;

fn main() -> Result<()> {
    let ds = generate_synthetic(Regime::Stable, 500, 5, 3)?;
    let folds = assign_folds(&ds, 5, 3, false)?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let tests = enumerate_tests(&ds, &all);

    let mut counters = Counters::default();
    let parts = accumulate_fold_statistics(&ds, &folds, &all, &tests, &mut counters);
    let training = derive_training_statistics(&parts)?;
    println!("{} tests, {} example-test evaluations for all {} folds", tests.len(), counters.evaluations, folds.n() + 1);

    let rows: Vec<usize> = (0..=folds.n()).collect();
    let q = QualityTable::from_training(&training, &rows, Measure::InformationGain)?;
    for (r, i) in rows.iter().enumerate() {
        let gains: Vec<String> = q.row(r).iter().map(|g| format!("{g:.4}")).collect();
        println!("T_{i}: gain per test [{}]", gains.join(", "));
    }
    Ok(())
}
