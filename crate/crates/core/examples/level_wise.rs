//! Level-wise growth: one pass over the data per level of the forest.

use cvforest::*;

fn main() -> Result<()> {
    let ds = generate_synthetic(Regime::Unstable, 3000, 12, 5)?;
    let depth_first = InductionConfig { n: 5, ..InductionConfig::default() };
    let level_wise = InductionConfig { variant: Variant::LevelWise, ..depth_first.clone() };
    let folds = depth_first.folds(&ds)?;

    let a = grow_forest(&ds, &folds, &depth_first)?;
    let b = grow_forest(&ds, &folds, &level_wise)?;
    let c = &b.profile.counters;
    println!("identical forests: {}", a.to_json()? == b.to_json()?);
    println!("levels {}, data passes {}", forest_metrics(&b).max_depth, c.data_passes);
    println!("an example sat in at most {} frontier nodes at once", c.max_node_memberships);
    println!("evaluations depth-first {} level-wise {}", a.profile.counters.evaluations, c.evaluations);
    Ok(())
}
