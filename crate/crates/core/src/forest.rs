//! The forest: every fold's tree stored together, sharing nodes until the
//! folds' choices diverge.
//!
//! Each [`ForestNode`] is a bifurcation point holding one or more groups.
//! A group is a set of folds that made the same choice at that node: either
//! the same test (with one child node per outcome) or to stop with a leaf.
//! A node with a single test group is an ordinary shared test node.

use std::time::Instant;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::instrument::{BuildProfile, Counters};
use crate::splits::{Choice, Test, TestForm};
use crate::tree::{Leaf, Tree, TreeNode};

pub type NodeId = usize;

/// Sorted, duplicate-free set of fold indices (`0` is the full-data fold).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FoldSet(Vec<usize>);

impl FoldSet {
    pub fn new(mut folds: Vec<usize>) -> Self {
        folds.sort_unstable();
        folds.dedup();
        FoldSet(folds)
    }

    /// Folds `0..=n`.
    pub fn all(n: usize) -> Self {
        FoldSet((0..=n).collect())
    }

    pub fn contains(&self, fold: usize) -> bool {
        self.0.binary_search(&fold).is_ok()
    }

    pub fn position(&self, fold: usize) -> Option<usize> {
        self.0.binary_search(&fold).ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Whether an example held out in part `part` trains at least one of
    /// these folds. Only a lone fold `j > 0` excludes its own part.
    #[inline]
    pub fn trains_on_part(&self, part: usize) -> bool {
        !(self.0.len() == 1 && self.0[0] != 0 && self.0[0] == part)
    }
}

/// Folds that made the same choice at a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceGroup {
    pub folds: FoldSet,
    pub choice: Choice,
}

/// Groups folds with identical choices, ordered by each group's smallest
/// fold index.
pub fn group_folds_by_choice(choices: &[(usize, Choice)]) -> Vec<ChoiceGroup> {
    let mut sorted = choices.to_vec();
    sorted.sort_by_key(|&(fold, _)| fold);
    let mut groups: Vec<(Vec<usize>, Choice)> = Vec::new();
    for (fold, choice) in sorted {
        match groups.iter_mut().find(|(_, c)| *c == choice) {
            Some((folds, _)) => folds.push(fold),
            None => groups.push((vec![fold], choice)),
        }
    }
    groups
        .into_iter()
        .map(|(folds, choice)| ChoiceGroup {
            folds: FoldSet::new(folds),
            choice,
        })
        .collect()
}

/// Splits `examples` by the outcome of `test`, preserving order. Each
/// example is sorted exactly once.
pub fn partition_examples(
    examples: &[usize],
    test: &Test,
    dataset: &Dataset,
    counters: &mut Counters,
) -> Vec<Vec<usize>> {
    let start = Instant::now();
    let mut buckets = vec![Vec::new(); test.arity()];
    match (test.form, dataset.column(test.attribute)) {
        (TestForm::Discrete { .. }, crate::data::Column::Discrete(codes)) => {
            for &e in examples {
                buckets[codes[e] as usize].push(e);
            }
        }
        (TestForm::Threshold { threshold }, crate::data::Column::Numeric(values)) => {
            for &e in examples {
                buckets[usize::from(values[e] >= threshold)].push(e);
            }
        }
        _ => unreachable!("tests are enumerated from the dataset's own schema"),
    }
    counters.partitions += examples.len() as u64;
    counters.partition_time += start.elapsed();
    buckets
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupChoice {
    Split { test: Test, children: Vec<NodeId> },
    /// One leaf per fold of the group, in fold order.
    Leaf { leaves: Vec<Leaf> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationGroup {
    pub folds: FoldSet,
    pub choice: GroupChoice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestNode {
    pub depth: usize,
    /// Size of the pooled example set refined at this node.
    pub examples: usize,
    pub groups: Vec<BifurcationGroup>,
}

impl ForestNode {
    /// Number of child nodes: the summed arity of the distinct tests.
    pub fn child_count(&self) -> usize {
        self.groups
            .iter()
            .map(|g| match &g.choice {
                GroupChoice::Split { children, .. } => children.len(),
                GroupChoice::Leaf { .. } => 0,
            })
            .sum()
    }

    pub fn test_groups(&self) -> usize {
        self.groups
            .iter()
            .filter(|g| matches!(g.choice, GroupChoice::Split { .. }))
            .count()
    }
}

/// All `n + 1` trees of a cross-validation run, built together.
#[derive(Debug, Clone)]
pub struct Forest {
    n: usize,
    folds_digest: u64,
    attribute_names: Vec<String>,
    classes: Vec<String>,
    nodes: Vec<ForestNode>,
    pub profile: BuildProfile,
}

impl Forest {
    pub(crate) fn new(dataset: &Dataset, n: usize, folds_digest: u64) -> Self {
        let schema = dataset.schema();
        Forest {
            n,
            folds_digest,
            attribute_names: schema.attributes.iter().map(|a| a.name.clone()).collect(),
            classes: schema.target.classes.clone(),
            nodes: Vec::new(),
            profile: BuildProfile::default(),
        }
    }

    pub(crate) fn push(&mut self, depth: usize) -> NodeId {
        self.nodes.push(ForestNode {
            depth,
            examples: 0,
            groups: Vec::new(),
        });
        self.nodes.len() - 1
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut ForestNode {
        &mut self.nodes[id]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn folds_digest(&self) -> u64 {
        self.folds_digest
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &ForestNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[ForestNode] {
        &self.nodes
    }

    /// Structural comparison starting at both roots; layout and build
    /// profile are ignored. Regression leaf means compare at a relative
    /// `tolerance`.
    pub fn equivalent(&self, other: &Forest, tolerance: f64) -> bool {
        if self.n != other.n {
            return false;
        }
        let mut stack = vec![(self.root(), other.root())];
        while let Some((a, b)) = stack.pop() {
            let (x, y) = (&self.nodes[a], &other.nodes[b]);
            if x.depth != y.depth || x.examples != y.examples || x.groups.len() != y.groups.len() {
                return false;
            }
            for (g, h) in x.groups.iter().zip(&y.groups) {
                if g.folds != h.folds {
                    return false;
                }
                match (&g.choice, &h.choice) {
                    (
                        GroupChoice::Split { test: s, children: c },
                        GroupChoice::Split { test: t, children: d },
                    ) => {
                        if s != t || c.len() != d.len() {
                            return false;
                        }
                        stack.extend(c.iter().copied().zip(d.iter().copied()));
                    }
                    (GroupChoice::Leaf { leaves: l }, GroupChoice::Leaf { leaves: m }) => {
                        if l.len() != m.len() || !l.iter().zip(m).all(|(p, q)| p.approx_eq(q, tolerance)) {
                            return false;
                        }
                    }
                    _ => return false,
                }
            }
        }
        true
    }

    /// Deterministic nested JSON with stable field order.
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&ForestView(self))
    }
}

impl PartialEq for Forest {
    fn eq(&self, other: &Forest) -> bool {
        self.equivalent(other, 0.0)
    }
}

/// Fold `i`'s tree: at every bifurcation the group containing `i` is taken.
pub fn extract_fold_tree(forest: &Forest, i: usize) -> Result<Tree> {
    if i > forest.n() {
        return Err(Error::FoldIndex {
            index: i,
            n: forest.n(),
        });
    }
    let mut tree = Tree::new();
    let root = tree.push(TreeNode::Leaf(Leaf::Regression { mean: 0.0, count: 0 }));
    let mut work = vec![(forest.root(), root)];
    while let Some((fid, tid)) = work.pop() {
        let node = forest.node(fid);
        let group = node
            .groups
            .iter()
            .find(|g| g.folds.contains(i))
            .ok_or_else(|| Error::Verification(format!("fold {i} has no group at forest node {fid}")))?;
        match &group.choice {
            GroupChoice::Leaf { leaves } => {
                let pos = group.folds.position(i).expect("group contains the fold");
                tree.set(tid, TreeNode::Leaf(leaves[pos].clone()));
            }
            GroupChoice::Split { test, children } => {
                let ids: Vec<usize> = children
                    .iter()
                    .map(|_| tree.push(TreeNode::Leaf(Leaf::Regression { mean: 0.0, count: 0 })))
                    .collect();
                work.extend(children.iter().copied().zip(ids.iter().copied()));
                tree.set(
                    tid,
                    TreeNode::Split {
                        test: *test,
                        children: ids,
                    },
                );
            }
        }
    }
    Ok(tree)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub level: usize,
    pub nodes: usize,
    pub test_groups: usize,
    /// Mean number of distinct tests per node on this level, over nodes
    /// holding at least one test; `None` if the level has only leaves.
    pub f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestMetrics {
    /// Bifurcation points (forest nodes).
    pub nodes: usize,
    /// Test groups, i.e. test nodes in the sense of a single tree.
    pub test_nodes: usize,
    /// Per-fold leaves.
    pub leaves: usize,
    /// Nodes holding more than one group.
    pub bifurcations: usize,
    /// Number of node levels.
    pub max_depth: usize,
    pub levels: Vec<LevelMetrics>,
}

impl ForestMetrics {
    /// f values of levels that hold tests.
    pub fn f_values(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.f).collect()
    }

    pub fn max_f(&self) -> f64 {
        self.f_values().into_iter().fold(0.0, f64::max)
    }
}

pub fn forest_metrics(forest: &Forest) -> ForestMetrics {
    let mut levels: Vec<LevelMetrics> = Vec::new();
    let mut with_tests: Vec<usize> = Vec::new();
    let mut metrics = ForestMetrics {
        nodes: forest.nodes.len(),
        test_nodes: 0,
        leaves: 0,
        bifurcations: 0,
        max_depth: 0,
        levels: Vec::new(),
    };
    for node in &forest.nodes {
        while levels.len() <= node.depth {
            levels.push(LevelMetrics {
                level: levels.len(),
                nodes: 0,
                test_groups: 0,
                f: None,
            });
            with_tests.push(0);
        }
        let tests = node.test_groups();
        let level = &mut levels[node.depth];
        level.nodes += 1;
        level.test_groups += tests;
        if tests > 0 {
            with_tests[node.depth] += 1;
        }
        metrics.test_nodes += tests;
        metrics.leaves += node
            .groups
            .iter()
            .map(|g| match &g.choice {
                GroupChoice::Leaf { leaves } => leaves.len(),
                GroupChoice::Split { .. } => 0,
            })
            .sum::<usize>();
        if node.groups.len() > 1 {
            metrics.bifurcations += 1;
        }
    }
    for (level, count) in levels.iter_mut().zip(with_tests) {
        if count > 0 {
            level.f = Some(level.test_groups as f64 / count as f64);
        }
    }
    metrics.max_depth = levels.len();
    metrics.levels = levels;
    metrics
}

struct ForestView<'a>(&'a Forest);

impl Serialize for ForestView<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let forest = self.0;
        let mut map = serializer.serialize_map(Some(4))?;
        map.serialize_entry("folds", &forest.n)?;
        map.serialize_entry("attributes", &forest.attribute_names)?;
        map.serialize_entry("classes", &forest.classes)?;
        map.serialize_entry("root", &NodeView { forest, id: forest.root() })?;
        map.end()
    }
}

struct NodeView<'a> {
    forest: &'a Forest,
    id: NodeId,
}

impl Serialize for NodeView<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let node = self.forest.node(self.id);
        if let [group] = node.groups.as_slice() {
            GroupView { forest: self.forest, group }.serialize(serializer)
        } else {
            let mut map = serializer.serialize_map(Some(2))?;
            map.serialize_entry("type", "bifurcation")?;
            map.serialize_entry(
                "groups",
                &Seq(node
                    .groups
                    .iter()
                    .map(|group| GroupView { forest: self.forest, group })
                    .collect()),
            )?;
            map.end()
        }
    }
}

struct GroupView<'a> {
    forest: &'a Forest,
    group: &'a BifurcationGroup,
}

#[derive(Serialize)]
struct TestJson<'a> {
    attribute: usize,
    name: &'a str,
    #[serde(flatten)]
    form: TestForm,
}

#[derive(Serialize)]
struct FoldLeaf<'a> {
    fold: usize,
    #[serde(flatten)]
    leaf: &'a Leaf,
}

impl Serialize for GroupView<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(4))?;
        match &self.group.choice {
            GroupChoice::Split { test, children } => {
                map.serialize_entry("type", "test")?;
                map.serialize_entry("folds", &self.group.folds)?;
                map.serialize_entry(
                    "test",
                    &TestJson {
                        attribute: test.attribute,
                        name: &self.forest.attribute_names[test.attribute],
                        form: test.form,
                    },
                )?;
                map.serialize_entry(
                    "children",
                    &Seq(children
                        .iter()
                        .map(|&id| NodeView { forest: self.forest, id })
                        .collect()),
                )?;
            }
            GroupChoice::Leaf { leaves } => {
                map.serialize_entry("type", "leaf")?;
                map.serialize_entry("folds", &self.group.folds)?;
                map.serialize_entry(
                    "leaves",
                    &self
                        .group
                        .folds
                        .iter()
                        .zip(leaves)
                        .map(|(fold, leaf)| FoldLeaf { fold, leaf })
                        .collect::<Vec<_>>(),
                )?;
            }
        }
        map.end()
    }
}

struct Seq<T>(Vec<T>);

impl<T: Serialize> Serialize for Seq<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for item in &self.0 {
            seq.serialize_element(item)?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Attribute, Column, Schema, Target, TargetColumn};

    #[test]
    fn unanimous_group() {
        let choices: Vec<(usize, Choice)> = (0..4).map(|f| (f, Choice::Test(7))).collect();
        let groups = group_folds_by_choice(&choices);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].folds, FoldSet::new(vec![0, 1, 2, 3]));
    }

    #[test]
    fn mixed_groups_in_fold_order() {
        let choices = vec![
            (3, Choice::Leaf),
            (0, Choice::Test(7)),
            (2, Choice::Test(2)),
            (1, Choice::Test(7)),
        ];
        let groups = group_folds_by_choice(&choices);
        assert_eq!(
            groups,
            vec![
                ChoiceGroup { folds: FoldSet::new(vec![0, 1]), choice: Choice::Test(7) },
                ChoiceGroup { folds: FoldSet::new(vec![2]), choice: Choice::Test(2) },
                ChoiceGroup { folds: FoldSet::new(vec![3]), choice: Choice::Leaf },
            ]
        );
    }

    #[test]
    fn all_distinct_gives_n_plus_one_groups() {
        let n = 10;
        let choices: Vec<(usize, Choice)> = (0..=n).map(|f| (f, Choice::Test(f))).collect();
        assert_eq!(group_folds_by_choice(&choices).len(), n + 1);
    }

    #[test]
    fn partition_sizes() {
        let values: Vec<f64> = (0..12).map(|v| v as f64).collect();
        let ds = Dataset::new(
            Schema::new(vec![Attribute::numeric("x")], Target::class("y", vec!["a".into()])).unwrap(),
            vec![Column::Numeric(values)],
            TargetColumn::Class(vec![0; 12]),
        )
        .unwrap();
        let mut counters = Counters::default();
        let all: Vec<usize> = (0..12).collect();
        let buckets = partition_examples(&all, &Test::threshold(0, 6.5), &ds, &mut counters);
        assert_eq!(buckets[0].len(), 7);
        assert_eq!(buckets[1].len(), 5);
        assert_eq!(counters.partitions, 12);
        assert!(buckets[0].windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn trains_on_part() {
        assert!(FoldSet::new(vec![0]).trains_on_part(0));
        assert!(!FoldSet::new(vec![2]).trains_on_part(2));
        assert!(FoldSet::new(vec![2]).trains_on_part(1));
        assert!(FoldSet::new(vec![1, 2]).trains_on_part(2));
    }

    fn class_leaf(majority: u32, distribution: Vec<u64>) -> Leaf {
        Leaf::Class { majority, distribution }
    }

    fn leaf_group(folds: Vec<usize>, majority: u32) -> BifurcationGroup {
        BifurcationGroup {
            choice: GroupChoice::Leaf {
                leaves: folds.iter().map(|_| class_leaf(majority, vec![1, 2])).collect(),
            },
            folds: FoldSet::new(folds),
        }
    }

    /// A three-fold forest shaped like the textbook example: a shared root
    /// test A, then on one branch folds 1 and 2 (with fold 0) refine with
    /// test B while fold 3 refines with test C.
    fn three_fold_forest() -> Forest {
        let binary = || vec!["0".to_string(), "1".to_string()];
        let ds = Dataset::new(
            Schema::new(
                vec![
                    Attribute::discrete("A", binary()),
                    Attribute::discrete("B", binary()),
                    Attribute::discrete("C", binary()),
                ],
                Target::class("y", vec!["neg".into(), "pos".into()]),
            )
            .unwrap(),
            vec![
                Column::Discrete(vec![0; 12]),
                Column::Discrete(vec![0; 12]),
                Column::Discrete(vec![0; 12]),
            ],
            TargetColumn::Class(vec![0; 12]),
        )
        .unwrap();
        let mut f = Forest::new(&ds, 3, 0);
        let root = f.push(0);
        let left = f.push(1);
        let right = f.push(1);
        let b: Vec<NodeId> = (0..2).map(|_| f.push(2)).collect();
        let c: Vec<NodeId> = (0..2).map(|_| f.push(2)).collect();
        f.node_mut(root).groups = vec![BifurcationGroup {
            folds: FoldSet::all(3),
            choice: GroupChoice::Split { test: Test::discrete(0, 2), children: vec![left, right] },
        }];
        f.node_mut(left).groups = vec![leaf_group(vec![0, 1, 2, 3], 0)];
        f.node_mut(right).groups = vec![
            BifurcationGroup {
                folds: FoldSet::new(vec![0, 1, 2]),
                choice: GroupChoice::Split { test: Test::discrete(1, 2), children: b.clone() },
            },
            BifurcationGroup {
                folds: FoldSet::new(vec![3]),
                choice: GroupChoice::Split { test: Test::discrete(2, 2), children: c.clone() },
            },
        ];
        for (j, &id) in b.iter().enumerate() {
            f.node_mut(id).groups = vec![leaf_group(vec![0, 1, 2], j as u32)];
        }
        for (j, &id) in c.iter().enumerate() {
            f.node_mut(id).groups = vec![leaf_group(vec![3], j as u32)];
        }
        f
    }

    #[test]
    fn extract_takes_the_fold_group() {
        let f = three_fold_forest();
        let t3 = extract_fold_tree(&f, 3).unwrap();
        let TreeNode::Split { children, .. } = t3.node(t3.root()) else { panic!() };
        let TreeNode::Split { test, .. } = t3.node(children[1]) else { panic!() };
        assert_eq!(test.attribute, 2, "fold 3 goes through test C");
        let t1 = extract_fold_tree(&f, 1).unwrap();
        let TreeNode::Split { children, .. } = t1.node(t1.root()) else { panic!() };
        let TreeNode::Split { test, .. } = t1.node(children[1]) else { panic!() };
        assert_eq!(test.attribute, 1);
        assert_eq!(extract_fold_tree(&f, 0).unwrap(), t1);
        assert_eq!(t3.depth(), 3);
        assert!(matches!(extract_fold_tree(&f, 4), Err(Error::FoldIndex { .. })));
    }

    #[test]
    fn metrics_of_three_fold_forest() {
        let f = three_fold_forest();
        let m = forest_metrics(&f);
        assert_eq!(m.bifurcations, 1);
        assert_eq!(m.test_nodes, 3);
        assert_eq!(m.max_depth, 3);
        assert_eq!(m.levels[0].f, Some(1.0));
        // level 1: one leaf-only node, one node with two tests
        assert_eq!(m.levels[1].f, Some(2.0));
        assert_eq!(m.levels[2].f, None);
        assert_eq!(f.node(2).child_count(), 4);
        // memory bound against fold 0's tree
        let t0 = extract_fold_tree(&f, 0).unwrap();
        assert!(m.test_nodes <= (f.n() + 1) * t0.node_count());
    }

    #[test]
    fn json_tags() {
        let f = three_fold_forest();
        let v: serde_json::Value = serde_json::from_str(&f.to_json().unwrap()).unwrap();
        assert_eq!(v["folds"], 3);
        let root = &v["root"];
        assert_eq!(root["type"], "test");
        assert_eq!(root["test"]["name"], "A");
        assert_eq!(root["children"][0]["type"], "leaf");
        assert_eq!(root["children"][0]["leaves"][3]["fold"], 3);
        let bif = &root["children"][1];
        assert_eq!(bif["type"], "bifurcation");
        assert_eq!(bif["groups"][1]["folds"], serde_json::json!([3]));
        assert_eq!(bif["groups"][1]["test"]["name"], "C");
        assert_eq!(f.to_json().unwrap(), three_fold_forest().to_json().unwrap());
    }

    #[test]
    fn stable_forest_has_unit_f() {
        let mut f = three_fold_forest();
        let right = 2;
        let first = f.node(right).groups[0].clone();
        f.node_mut(right).groups = vec![BifurcationGroup { folds: FoldSet::all(3), ..first }];
        let m = forest_metrics(&f);
        assert_eq!(m.bifurcations, 0);
        assert!(m.f_values().iter().all(|&v| v == 1.0));
    }
}
