//! Self-checks of a forest build against independent computations.
//!
//! * every fold tree extracted from the forest matches the serially built
//!   tree on the same training view;
//! * the level-wise and depth-first forests coincide and serialize alike;
//! * per-fold statistics derived by subtraction match direct accumulation;
//! * the forest holds at most `n + 1` times the actual tree's node count in
//!   test nodes.

use serde::Serialize;

use crate::data::{training_view, Dataset, FoldAssignment, TargetKind};
use crate::error::{Error, Result};
use crate::forest::{extract_fold_tree, forest_metrics, Forest};
use crate::induction::{grow_forest_depth_first, grow_forest_level_wise, grow_tree_serial, InductionConfig};
use crate::splits::TestForm;
use crate::tree::{Tree, TreeNode};

/// Relative tolerance for regression leaf means.
pub const REGRESSION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn extend(&mut self, other: VerifyReport) {
        self.checks.extend(other.checks);
    }
}

/// Whether two trees agree on the examples of `view`.
///
/// Threshold tests on the same attribute count as equal when they send the
/// examples reaching the node the same way. A forest enumerates thresholds
/// over the pooled examples of all folds, so its midpoints can differ from
/// those a fold's own tree would pick while splitting that fold's training
/// examples identically.
pub fn trees_match_on(a: &Tree, b: &Tree, dataset: &Dataset, view: &[usize], tolerance: f64) -> bool {
    let mut stack = vec![(a.root(), b.root(), view.to_vec())];
    while let Some((x, y, examples)) = stack.pop() {
        match (a.node(x), b.node(y)) {
            (TreeNode::Leaf(p), TreeNode::Leaf(q)) => {
                if !p.approx_eq(q, tolerance) {
                    return false;
                }
            }
            (TreeNode::Split { test: s, children: c }, TreeNode::Split { test: t, children: d }) => {
                let same = match (s.form, t.form) {
                    (TestForm::Threshold { .. }, TestForm::Threshold { .. }) => {
                        s.attribute == t.attribute
                            && examples.iter().all(|&e| s.outcome(dataset, e) == t.outcome(dataset, e))
                    }
                    _ => s == t,
                };
                if !same || c.len() != d.len() {
                    return false;
                }
                let mut buckets = vec![Vec::new(); c.len()];
                for &e in &examples {
                    buckets[s.outcome(dataset, e)].push(e);
                }
                for ((&cx, &cy), bucket) in c.iter().zip(d).zip(buckets) {
                    stack.push((cx, cy, bucket));
                }
            }
            _ => return false,
        }
    }
    true
}

/// Test nodes in the forest against `(n + 1)` times the actual tree's size.
pub fn memory_bound_holds(forest: &Forest, actual: &Tree) -> bool {
    forest_metrics(forest).test_nodes <= (forest.n() + 1) * actual.node_count()
}

fn has_numeric_attributes(dataset: &Dataset) -> bool {
    dataset
        .schema()
        .attributes
        .iter()
        .any(|a| matches!(a.kind, crate::data::AttributeKind::Numeric))
}

/// Runs every check on one dataset and fold assignment.
///
/// Class targets over discrete attributes must match exactly; numeric
/// attributes are compared modulo threshold placement and regression leaf
/// means at [`REGRESSION_TOLERANCE`].
pub fn verify_dataset(dataset: &Dataset, folds: &FoldAssignment, config: &InductionConfig) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let tag = format!("N={} n={}", dataset.len(), folds.n());

    let checked = InductionConfig { verify: true, ..config.clone() };
    match grow_forest_depth_first(dataset, folds, &checked) {
        Ok(_) => report.push("subtraction", true, tag.clone()),
        Err(Error::Verification(msg)) => report.push("subtraction", false, format!("{tag}: {msg}")),
        Err(e) => return Err(e),
    }

    let forest = grow_forest_depth_first(dataset, folds, config)?;
    let tolerance = match dataset.target_kind() {
        TargetKind::Class => 0.0,
        TargetKind::Numeric => REGRESSION_TOLERANCE,
    };
    let numeric = has_numeric_attributes(dataset);
    let mut mismatches = Vec::new();
    let mut actual = None;
    for i in 0..=folds.n() {
        let view = training_view(dataset, folds, i)?;
        let serial = grow_tree_serial(dataset, &view, config)?;
        let extracted = extract_fold_tree(&forest, i)?;
        let same = if numeric {
            trees_match_on(&extracted, &serial, dataset, &view, tolerance)
        } else {
            extracted.equivalent(&serial, tolerance)
        };
        if !same {
            let path = extracted.first_difference(&serial, tolerance).unwrap_or_default();
            mismatches.push(format!("fold {i} differs at path {path:?}"));
        }
        if i == 0 {
            actual = Some(serial);
        }
    }
    report.push(
        "equivalence",
        mismatches.is_empty(),
        if mismatches.is_empty() { tag.clone() } else { format!("{tag}: {}", mismatches.join("; ")) },
    );

    let level = grow_forest_level_wise(dataset, folds, config)?;
    let same_json = level.to_json()? == forest.to_json()?;
    report.push(
        "variant equivalence",
        same_json,
        if same_json { tag.clone() } else { format!("{tag}: level-wise forest differs") },
    );
    let depth = forest_metrics(&level).max_depth as u64;
    let passes = level.profile.counters.data_passes;
    report.push("data passes", passes == depth, format!("{tag}: {passes} passes, depth {depth}"));

    let actual = actual.expect("fold 0 is always checked");
    let bounded = memory_bound_holds(&forest, &actual);
    report.push(
        "memory bound",
        bounded,
        format!(
            "{tag}: {} test nodes, actual tree {} nodes",
            forest_metrics(&forest).test_nodes,
            actual.node_count()
        ),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::assign_folds;
    use crate::splits::Test;
    use crate::synthetic::{random_dataset, SuiteKind};
    use crate::tree::Leaf;

    #[test]
    fn random_suites_pass() {
        for (k, kind) in [SuiteKind::Discrete, SuiteKind::Numeric, SuiteKind::Regression].into_iter().enumerate() {
            for seed in 0..4 {
                let ds = random_dataset(kind, seed + 100 * k as u64);
                let n = [2, 3, 5, 10][seed as usize];
                let folds = assign_folds(&ds, n, seed, false).unwrap();
                let report = verify_dataset(&ds, &folds, &InductionConfig { n, measure: crate::splits::Measure::default_for(ds.target_kind()), ..InductionConfig::default() }).unwrap();
                assert!(report.passed(), "{kind:?} seed {seed}: {:?}", report.failures().collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn threshold_placement_is_ignored() {
        let ds = random_dataset(SuiteKind::Numeric, 1);
        let attr = ds
            .schema()
            .attributes
            .iter()
            .position(|a| matches!(a.kind, crate::data::AttributeKind::Numeric))
            .unwrap();
        let stump = |threshold: f64| {
            let mut t = Tree::new();
            let root = t.push(TreeNode::Leaf(Leaf::Class { majority: 0, distribution: vec![] }));
            let lo = t.push(TreeNode::Leaf(Leaf::Class { majority: 0, distribution: vec![1, 0] }));
            let hi = t.push(TreeNode::Leaf(Leaf::Class { majority: 1, distribution: vec![0, 1] }));
            t.set(root, TreeNode::Split { test: Test::threshold(attr, threshold), children: vec![lo, hi] });
            t
        };
        // values lie on a half-unit grid, so 2.6 and 2.9 split them alike
        let all: Vec<usize> = (0..ds.len()).collect();
        assert!(trees_match_on(&stump(2.6), &stump(2.9), &ds, &all, 0.0));
        assert!(!trees_match_on(&stump(2.6), &stump(3.1), &ds, &all, 0.0));
        assert!(!stump(2.6).equivalent(&stump(2.9), 0.0));
    }
}
