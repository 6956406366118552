//! Grows the actual tree and every fold tree in one forest, then checks each
//! extracted fold tree against a tree grown on its own.

use cvforest::*;

fn main() -> Result<()> {
    let ds = generate_synthetic(Regime::Mixed, 2000, 8, 11)?;
    let config = InductionConfig { n: 10, seed: 11, ..InductionConfig::default() };
    let folds = config.folds(&ds)?;
    let forest = grow_forest(&ds, &folds, &config)?;

    let m = forest_metrics(&forest);
    println!(
        "forest: {} nodes, {} test nodes, {} bifurcations, {} levels",
        m.nodes, m.test_nodes, m.bifurcations, m.max_depth
    );
    for l in &m.levels {
        if let Some(f) = l.f {
            println!("  level {:>2}: {:>4} nodes, f = {f:.2}", l.level, l.nodes);
        }
    }

    for i in 0..=folds.n() {
        let tree = extract_fold_tree(&forest, i)?;
        let alone = grow_tree_serial(&ds, &training_view(&ds, &folds, i)?, &config)?;
        println!("fold {i:>2}: {:>3} nodes, same as serial: {}", tree.node_count(), tree == alone);
    }
    Ok(())
}
