//! A 10-fold estimate from the forest, compared with the serial baseline.

use cvforest::*;

fn main() -> Result<()> {
    let ds = generate_synthetic(Regime::Mixed, 5000, 10, 2)?;
    let config = InductionConfig { n: 10, stratified: true, ..InductionConfig::default() };
    let folds = config.folds(&ds)?;

    let forest = grow_forest(&ds, &folds, &config)?;
    let report = cross_validation_estimate(&forest, &ds, &folds)?;
    for f in &report.folds {
        println!("fold {:>2}: {:>4} held out, accuracy {:.4}", f.fold, f.size, f.metric.unwrap_or(f64::NAN));
    }
    println!("{} = {:.4}", report.metric, report.aggregate);

    let serial = run_serial_cross_validation(&ds, &folds, &config)?;
    let baseline = estimate_from_trees(&serial.folds, &ds, &folds)?;
    println!("serial baseline agrees: {}", baseline == report);

    // the actual tree classifies new examples
    let actual = extract_fold_tree(&forest, 0)?;
    println!("prediction for example 0: {:?}", predict(&actual, ds.schema(), &ds.example(0))?);
    Ok(())
}
