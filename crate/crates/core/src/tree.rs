//! Ordinary single decision trees: the serial builder's output and what a
//! forest yields for one fold.

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};

use crate::data::{Dataset, TargetValue};
use crate::instrument::BuildProfile;
use crate::splits::{StatisticsMatrix, Test};

/// What a leaf stores about the training examples that reached it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Leaf {
    /// `distribution[c]` examples of class `c`; `majority` is the most
    /// frequent class, lowest index on ties.
    Class { majority: u32, distribution: Vec<u64> },
    Regression { mean: f64, count: u64 },
}

impl Leaf {
    /// Leaf from target-only statistics. An empty leaf predicts like
    /// `fallback` (the enclosing node), or class 0 / mean 0 without one.
    pub fn from_targets(targets: &StatisticsMatrix, fallback: Option<&Leaf>) -> Leaf {
        match targets.marginal() {
            StatisticsMatrix::Class { counts, .. } => {
                let total: u64 = counts.iter().sum();
                let majority = if total == 0 {
                    match fallback {
                        Some(Leaf::Class { majority, .. }) => *majority,
                        _ => 0,
                    }
                } else {
                    let mut best = 0;
                    for (c, &count) in counts.iter().enumerate() {
                        if count > counts[best] {
                            best = c;
                        }
                    }
                    best as u32
                };
                Leaf::Class {
                    majority,
                    distribution: counts,
                }
            }
            StatisticsMatrix::Numeric { cells } => {
                let m = cells[0];
                let mean = if m.count == 0 {
                    match fallback {
                        Some(Leaf::Regression { mean, .. }) => *mean,
                        _ => 0.0,
                    }
                } else {
                    m.mean()
                };
                Leaf::Regression {
                    mean,
                    count: m.count,
                }
            }
        }
    }

    pub fn prediction(&self) -> TargetValue {
        match self {
            Leaf::Class { majority, .. } => TargetValue::Class(*majority),
            Leaf::Regression { mean, .. } => TargetValue::Numeric(*mean),
        }
    }

    pub fn count(&self) -> u64 {
        match self {
            Leaf::Class { distribution, .. } => distribution.iter().sum(),
            Leaf::Regression { count, .. } => *count,
        }
    }

    pub(crate) fn approx_eq(&self, other: &Leaf, tolerance: f64) -> bool {
        match (self, other) {
            (Leaf::Regression { mean: a, count: c }, Leaf::Regression { mean: b, count: d }) => {
                c == d && (a - b).abs() <= tolerance * a.abs().max(b.abs()).max(1.0)
            }
            _ => self == other,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf(Leaf),
    /// One child per test outcome.
    Split { test: Test, children: Vec<usize> },
}

/// Arena-backed decision tree rooted at node 0.
///
/// Equality is structural: node layout and the build profile are ignored.
#[derive(Debug, Clone, Default)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    pub profile: BuildProfile,
}

impl Tree {
    pub(crate) fn new() -> Self {
        Tree::default()
    }

    pub(crate) fn push(&mut self, node: TreeNode) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub(crate) fn set(&mut self, id: usize, node: TreeNode) {
        self.nodes[id] = node;
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn test_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }

    pub fn leaf_count(&self) -> usize {
        self.node_count() - self.test_count()
    }

    /// Number of node levels; a lone leaf has depth 1.
    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(self.root(), 1usize)];
        while let Some((id, d)) = stack.pop() {
            deepest = deepest.max(d);
            if let TreeNode::Split { children, .. } = &self.nodes[id] {
                stack.extend(children.iter().map(|&c| (c, d + 1)));
            }
        }
        deepest
    }

    /// Leaf reached by example `e` of `dataset`.
    pub fn leaf_for(&self, dataset: &Dataset, e: usize) -> &Leaf {
        let mut id = self.root();
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf(leaf) => return leaf,
                TreeNode::Split { test, children } => id = children[test.outcome(dataset, e)],
            }
        }
    }

    pub fn predict_example(&self, dataset: &Dataset, e: usize) -> TargetValue {
        self.leaf_for(dataset, e).prediction()
    }

    /// Structural comparison with regression leaf means compared at a
    /// relative `tolerance`.
    pub fn equivalent(&self, other: &Tree, tolerance: f64) -> bool {
        self.first_difference(other, tolerance).is_none()
    }

    /// Path (outcome indices from the root) to the first structural
    /// difference, if any.
    pub fn first_difference(&self, other: &Tree, tolerance: f64) -> Option<Vec<usize>> {
        let mut stack = vec![(self.root(), other.root(), Vec::new())];
        while let Some((a, b, path)) = stack.pop() {
            match (&self.nodes[a], &other.nodes[b]) {
                (TreeNode::Leaf(x), TreeNode::Leaf(y)) => {
                    if !x.approx_eq(y, tolerance) {
                        return Some(path);
                    }
                }
                (
                    TreeNode::Split { test: s, children: c },
                    TreeNode::Split { test: t, children: d },
                ) => {
                    if s != t || c.len() != d.len() {
                        return Some(path);
                    }
                    for (j, (&x, &y)) in c.iter().zip(d).enumerate().rev() {
                        let mut p = path.clone();
                        p.push(j);
                        stack.push((x, y, p));
                    }
                }
                _ => return Some(path),
            }
        }
        None
    }

    /// Nested JSON view of the tree.
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&TreeView { tree: self, id: self.root() })
    }
}

impl PartialEq for Tree {
    fn eq(&self, other: &Tree) -> bool {
        self.equivalent(other, 0.0)
    }
}

struct TreeView<'a> {
    tree: &'a Tree,
    id: usize,
}

impl Serialize for TreeView<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        match &self.tree.nodes[self.id] {
            TreeNode::Leaf(leaf) => {
                map.serialize_entry("type", "leaf")?;
                map.serialize_entry("leaf", leaf)?;
            }
            TreeNode::Split { test, children } => {
                map.serialize_entry("type", "test")?;
                map.serialize_entry("test", test)?;
                map.serialize_entry("children", &Children { tree: self.tree, ids: children })?;
            }
        }
        map.end()
    }
}

struct Children<'a> {
    tree: &'a Tree,
    ids: &'a [usize],
}

impl Serialize for Children<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.ids.len()))?;
        for &id in self.ids {
            seq.serialize_element(&TreeView { tree: self.tree, id })?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(majority: u32, distribution: Vec<u64>) -> TreeNode {
        TreeNode::Leaf(Leaf::Class {
            majority,
            distribution,
        })
    }

    fn stump(threshold: f64) -> Tree {
        let mut t = Tree::new();
        let root = t.push(leaf(0, vec![]));
        let a = t.push(leaf(1, vec![0, 2]));
        let b = t.push(leaf(0, vec![3, 0]));
        t.set(
            root,
            TreeNode::Split {
                test: Test::threshold(0, threshold),
                children: vec![a, b],
            },
        );
        t
    }

    #[test]
    fn structural_equality_ignores_layout() {
        let mut t = Tree::new();
        let root = t.push(leaf(0, vec![]));
        let b = t.push(leaf(0, vec![3, 0]));
        let a = t.push(leaf(1, vec![0, 2]));
        t.set(
            root,
            TreeNode::Split {
                test: Test::threshold(0, 2.0),
                children: vec![a, b],
            },
        );
        assert_eq!(t, stump(2.0));
        assert_ne!(stump(2.5), stump(2.0));
        assert_eq!(stump(2.0).first_difference(&stump(3.0), 0.0), Some(vec![]));
        assert_eq!(t.depth(), 2);
        assert_eq!(t.test_count(), 1);
        assert_eq!(t.leaf_count(), 2);
    }

    #[test]
    fn leaf_majority_and_fallback() {
        let s = StatisticsMatrix::Class {
            outcomes: 1,
            classes: 3,
            counts: vec![2, 5, 5],
        };
        let l = Leaf::from_targets(&s, None);
        assert_eq!(l.prediction(), TargetValue::Class(1));
        assert_eq!(l.count(), 12);
        let empty = Leaf::from_targets(&StatisticsMatrix::class(1, 3), Some(&l));
        assert_eq!(empty.prediction(), TargetValue::Class(1));
        assert_eq!(empty.count(), 0);
    }

    #[test]
    fn json_shape() {
        let json = stump(2.0).to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["type"], "test");
        assert_eq!(v["test"]["kind"], "threshold");
        assert_eq!(v["children"][0]["leaf"]["majority"], 1);
    }
}
