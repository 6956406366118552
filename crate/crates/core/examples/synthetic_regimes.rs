use cvforest::*;

// How much folds share depends on the data: a stable concept keeps all
// folds together, random labels split them apart at the root.
fn main() -> Result<()> {
    for regime in [Regime::Stable, Regime::Mixed, Regime::Unstable] {
        let ds = generate_synthetic(regime, 5000, 20, 0)?;
        let config = InductionConfig { n: 10, ..InductionConfig::default() };
        let folds = config.folds(&ds)?;
        let forest = grow_forest(&ds, &folds, &config)?;
        let serial = run_serial_cross_validation(&ds, &folds, &config)?;
        let m = forest_metrics(&forest);
        let ratio = serial.profile.counters.evaluations as f64 / forest.profile.counters.evaluations as f64;
        println!(
            "{regime:?}: max f {:.2}, {} bifurcations, evaluation ratio {ratio:.2}",
            m.max_f(),
            m.bifurcations
        );
    }
    Ok(())
}
