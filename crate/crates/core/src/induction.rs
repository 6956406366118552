//! Tree and forest induction.
//!
//! [`grow_forest_depth_first`] and [`grow_forest_level_wise`] build the
//! actual tree (fold 0) and all `n` cross-validation trees at once. At each
//! node the examples are scanned once per candidate test, statistics are
//! kept per held-out part and the per-fold statistics are derived by
//! subtraction. Folds that pick the same test keep sharing the node below;
//! folds that disagree split into separate groups.
//!
//! [`grow_tree_serial`] is the ordinary one-tree-at-a-time builder used as
//! the baseline and as the reference the forest is checked against.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, FoldAssignment, TargetKind};
use crate::error::{Error, Result};
use crate::forest::{
    group_folds_by_choice, partition_examples, BifurcationGroup, FoldSet, Forest, GroupChoice,
    NodeId,
};
use crate::instrument::{BuildProfile, Counters};
use crate::splits::{
    accumulate_fold_statistics, accumulate_targets, best_choice_per_fold, choose, compute_quality,
    enumerate_tests, Choice, Measure, NodeAccumulator, NodeSlice, PartStatistics, QualityTable,
    StatisticsMatrix, Test,
};
use crate::tree::{Leaf, Tree, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[serde(rename = "depth")]
    DepthFirst,
    #[serde(rename = "level")]
    LevelWise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InductionConfig {
    pub measure: Measure,
    /// Slices with fewer training examples become leaves.
    pub min_examples: u64,
    pub n: usize,
    pub seed: u64,
    pub stratified: bool,
    pub variant: Variant,
    /// Recompute every `S(T_i)` directly from the examples and fail on any
    /// disagreement with the subtraction path.
    pub verify: bool,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            measure: Measure::InformationGain,
            min_examples: 2,
            n: 10,
            seed: 0,
            stratified: false,
            variant: Variant::DepthFirst,
            verify: false,
        }
    }
}

impl InductionConfig {
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        if self.min_examples < 1 {
            return Err(Error::Config("min_examples must be at least 1".into()));
        }
        if self.measure.target_kind() != dataset.target_kind() {
            return Err(Error::MeasureMismatch {
                measure: self.measure.name(),
                target: match dataset.target_kind() {
                    TargetKind::Class => "class",
                    TargetKind::Numeric => "numeric",
                },
            });
        }
        Ok(())
    }

    /// Fold assignment described by this configuration.
    pub fn folds(&self, dataset: &Dataset) -> Result<FoldAssignment> {
        data::assign_folds(dataset, self.n, self.seed, self.stratified)
    }
}

/// The examples relevant to a forest node and the folds that reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeContext {
    /// Union of the active folds' training examples at this node, in
    /// dataset order.
    pub examples: Vec<usize>,
    pub folds: FoldSet,
    pub depth: usize,
    /// Leaf each active fold would have had at the parent; empty slices
    /// predict like it.
    pub fallback: Option<Vec<Leaf>>,
}

impl NodeContext {
    /// A node reached by a single fold holds exactly that fold's training
    /// examples, so its statistics are accumulated directly instead of per
    /// held-out part.
    pub fn is_lone(&self) -> bool {
        self.folds.len() == 1
    }

    /// Number of statistics parts kept at this node.
    fn parts(&self, n: usize) -> usize {
        if self.is_lone() {
            1
        } else {
            n
        }
    }

    fn part_of(&self, folds: &FoldAssignment, e: usize) -> usize {
        if self.is_lone() {
            0
        } else {
            folds.fold_of(e) - 1
        }
    }

    pub fn root(dataset: &Dataset, n: usize) -> Self {
        NodeContext {
            examples: (0..dataset.len()).collect(),
            folds: FoldSet::all(n),
            depth: 0,
            fallback: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Refined {
    /// One leaf per fold of the group.
    Leaf(Vec<Leaf>),
    /// The shared test and one child context per outcome.
    Split { test: Test, children: Vec<NodeContext> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedGroup {
    pub folds: FoldSet,
    pub refined: Refined,
}

/// Result of refining one forest node.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    /// Candidate tests considered; empty when every fold stopped early.
    pub tests: Vec<Test>,
    pub groups: Vec<RefinedGroup>,
}

fn check_folds(dataset: &Dataset, folds: &FoldAssignment) -> Result<()> {
    if folds.len() != dataset.len() {
        return Err(Error::Folds(format!(
            "assignment covers {} examples, dataset has {}",
            folds.len(),
            dataset.len()
        )));
    }
    Ok(())
}

/// Per-fold training statistics of the targets at a node.
fn fold_targets(
    part_targets: &[StatisticsMatrix],
    ctx: &NodeContext,
) -> Result<Vec<StatisticsMatrix>> {
    if ctx.is_lone() {
        return Ok(part_targets.to_vec());
    }
    let active = &ctx.folds;
    let mut total = part_targets[0].clone();
    for p in &part_targets[1..] {
        total.add_assign(p)?;
    }
    active
        .iter()
        .map(|i| {
            if i == 0 {
                Ok(total.clone())
            } else {
                total.subtract(&part_targets[i - 1])
            }
        })
        .collect()
}

fn matches_direct(direct: &StatisticsMatrix, derived: &StatisticsMatrix) -> bool {
    match (direct, derived) {
        (StatisticsMatrix::Numeric { cells: a }, StatisticsMatrix::Numeric { cells: b }) => {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| {
                    let close = |p: f64, q: f64| (p - q).abs() <= 1e-9 * p.abs().max(q.abs()).max(1.0);
                    x.count == y.count && close(x.sum, y.sum) && close(x.sum_sq, y.sum_sq)
                })
        }
        _ => direct == derived,
    }
}

/// Direct accumulation of `S(T_i, t)` over the node's examples, compared
/// against the derived statistics.
fn verify_fold_statistics(
    dataset: &Dataset,
    folds: &FoldAssignment,
    ctx: &NodeContext,
    tests: &[Test],
    fold: usize,
    derived: &[StatisticsMatrix],
) -> Result<()> {
    let view: Vec<usize> = ctx
        .examples
        .iter()
        .copied()
        .filter(|&e| fold == 0 || folds.fold_of(e) != fold)
        .collect();
    let mut acc = NodeAccumulator::new(dataset, tests, 1);
    for t in 0..tests.len() {
        acc.accumulate_test(t, &view, |_| 0);
    }
    for (t, direct) in acc.finish().iter().enumerate() {
        if !matches_direct(direct, &derived[t]) {
            return Err(Error::Verification(format!(
                "S(T_{fold}) for test {t} at depth {} differs from direct accumulation",
                ctx.depth
            )));
        }
    }
    Ok(())
}

/// Shared decision step of both forest builders.
///
/// `part_targets` are the target statistics per held-out part (a single
/// entry for a lone-fold node); `gather`
/// supplies the candidate tests and their per-part statistics and is only
/// called when at least one fold may still split.
fn resolve<G>(
    ctx: &NodeContext,
    part_targets: &[StatisticsMatrix],
    gather: G,
    dataset: &Dataset,
    folds: &FoldAssignment,
    config: &InductionConfig,
    counters: &mut Counters,
) -> Result<Refinement>
where
    G: FnOnce(&mut Counters) -> Result<(Vec<Test>, PartStatistics)>,
{
    let targets = fold_targets(part_targets, ctx)?;
    let leaves: Vec<Leaf> = targets
        .iter()
        .enumerate()
        .map(|(k, t)| Leaf::from_targets(t, ctx.fallback.as_ref().map(|f| &f[k])))
        .collect();
    let slices: Vec<NodeSlice> = ctx
        .folds
        .iter()
        .zip(&targets)
        .map(|(i, t)| NodeSlice::from_targets(i, t))
        .collect();

    let all_leaves = |tests: Vec<Test>| Refinement {
        tests,
        groups: vec![RefinedGroup {
            folds: ctx.folds.clone(),
            refined: Refined::Leaf(leaves.clone()),
        }],
    };
    if slices.iter().all(|s| s.stops(config.min_examples)) {
        return Ok(all_leaves(Vec::new()));
    }
    let (tests, parts) = gather(counters)?;
    if tests.is_empty() {
        return Ok(all_leaves(tests));
    }

    let pooled = parts.pooled()?;
    let mut scores = Vec::with_capacity(ctx.folds.len() * tests.len());
    for i in ctx.folds.iter() {
        let derived: Vec<StatisticsMatrix> = if ctx.is_lone() {
            pooled.clone()
        } else {
            (0..tests.len())
                .map(|t| parts.training(&pooled, i, t))
                .collect::<Result<_>>()?
        };
        if config.verify {
            verify_fold_statistics(dataset, folds, ctx, &tests, i, &derived)?;
        }
        for s in &derived {
            scores.push(if s.total() == 0 { 0.0 } else { compute_quality(s, config.measure)? });
        }
    }
    let q = QualityTable::new(config.measure, ctx.folds.as_slice().to_vec(), tests.len(), scores)?;
    let choices = best_choice_per_fold(&q, &slices, config.min_examples);
    let tagged: Vec<(usize, Choice)> = ctx.folds.iter().zip(choices).collect();

    let mut groups = Vec::new();
    for group in group_folds_by_choice(&tagged) {
        let group_leaves: Vec<Leaf> = group
            .folds
            .iter()
            .map(|i| leaves[ctx.folds.position(i).expect("group folds are active")].clone())
            .collect();
        let refined = match group.choice {
            Choice::Leaf => Refined::Leaf(group_leaves),
            Choice::Test(t) => {
                let test = tests[t];
                // Examples held out by a lone fold no longer train anything here.
                let filtered;
                let pooled_examples: &[usize] = match group.folds.as_slice() {
                    [j] if *j > 0 => {
                        filtered = ctx
                            .examples
                            .iter()
                            .copied()
                            .filter(|&e| group.folds.trains_on_part(folds.fold_of(e)))
                            .collect::<Vec<_>>();
                        &filtered
                    }
                    _ => &ctx.examples,
                };
                let buckets = partition_examples(pooled_examples, &test, dataset, counters);
                let children = buckets
                    .into_iter()
                    .map(|examples| NodeContext {
                        examples,
                        folds: group.folds.clone(),
                        depth: ctx.depth + 1,
                        fallback: Some(group_leaves.clone()),
                    })
                    .collect();
                Refined::Split { test, children }
            }
        };
        groups.push(RefinedGroup {
            folds: group.folds,
            refined,
        });
    }
    Ok(Refinement { tests, groups })
}

/// Refines one forest node for all of its active folds.
pub fn refine_node_parallel(
    ctx: &NodeContext,
    dataset: &Dataset,
    folds: &FoldAssignment,
    config: &InductionConfig,
    counters: &mut Counters,
) -> Result<Refinement> {
    let part_targets = accumulate_targets(dataset, &ctx.examples, ctx.parts(folds.n()), |e| ctx.part_of(folds, e));
    resolve(
        ctx,
        &part_targets,
        |counters| {
            let tests = enumerate_tests(dataset, &ctx.examples);
            let parts = if ctx.is_lone() {
                let start = Instant::now();
                let mut acc = NodeAccumulator::new(dataset, &tests, 1);
                for t in 0..tests.len() {
                    acc.accumulate_test(t, &ctx.examples, |_| 0);
                }
                counters.evaluations += (tests.len() * ctx.examples.len()) as u64;
                let matrices = acc.finish();
                counters.accumulate_time += start.elapsed();
                PartStatistics::from_matrices(1, tests.len(), matrices)?
            } else {
                accumulate_fold_statistics(dataset, folds, &ctx.examples, &tests, counters)
            };
            Ok((tests, parts))
        },
        dataset,
        folds,
        config,
        counters,
    )
}

/// Stores a refinement in the forest and returns the child work items in
/// traversal order (group order, then outcome order).
fn attach(forest: &mut Forest, id: NodeId, examples: usize, refinement: Refinement) -> Vec<(NodeId, NodeContext)> {
    let mut pending = Vec::new();
    let mut groups = Vec::with_capacity(refinement.groups.len());
    for group in refinement.groups {
        let choice = match group.refined {
            Refined::Leaf(leaves) => GroupChoice::Leaf { leaves },
            Refined::Split { test, children } => {
                let ids = children
                    .into_iter()
                    .map(|child| {
                        let cid = forest.push(child.depth);
                        pending.push((cid, child));
                        cid
                    })
                    .collect();
                GroupChoice::Split { test, children: ids }
            }
        };
        groups.push(BifurcationGroup {
            folds: group.folds,
            choice,
        });
    }
    let node = forest.node_mut(id);
    node.examples = examples;
    node.groups = groups;
    pending
}

/// Depth-first forest induction with an explicit work stack.
pub fn grow_forest_depth_first(
    dataset: &Dataset,
    folds: &FoldAssignment,
    config: &InductionConfig,
) -> Result<Forest> {
    config.validate(dataset)?;
    check_folds(dataset, folds)?;
    let mut forest = Forest::new(dataset, folds.n(), folds.digest());
    let mut profile = BuildProfile::default();
    let root = forest.push(0);
    let mut work = vec![(root, NodeContext::root(dataset, folds.n()))];
    while let Some((id, ctx)) = work.pop() {
        let start = Instant::now();
        let before = profile.counters.evaluations;
        let refinement = refine_node_parallel(&ctx, dataset, folds, config, &mut profile.counters)?;
        profile.record_node(ctx.depth, start.elapsed(), profile.counters.evaluations - before);
        let pending = attach(&mut forest, id, ctx.examples.len(), refinement);
        work.extend(pending.into_iter().rev());
    }
    forest.profile = profile;
    Ok(forest)
}

/// Level-wise forest induction: one pass over the dataset per level.
///
/// During a pass every example is routed to each frontier node whose pooled
/// set holds it, updating that node's per-part statistics. Choices,
/// grouping and partitioning for the whole level follow the pass.
pub fn grow_forest_level_wise(
    dataset: &Dataset,
    folds: &FoldAssignment,
    config: &InductionConfig,
) -> Result<Forest> {
    config.validate(dataset)?;
    check_folds(dataset, folds)?;
    let n = folds.n();
    let mut forest = Forest::new(dataset, n, folds.digest());
    let mut profile = BuildProfile::default();
    let root = forest.push(0);
    let mut frontier = vec![(root, NodeContext::root(dataset, n))];

    while !frontier.is_empty() {
        let level = frontier[0].1.depth;
        let pass_start = Instant::now();
        profile.counters.data_passes += 1;

        let tests: Vec<Vec<Test>> = frontier
            .iter()
            .map(|(_, ctx)| {
                if ctx.examples.is_empty() {
                    Vec::new()
                } else {
                    enumerate_tests(dataset, &ctx.examples)
                }
            })
            .collect();
        let mut members: Vec<Vec<u32>> = vec![Vec::new(); dataset.len()];
        for (k, (_, ctx)) in frontier.iter().enumerate() {
            for &e in &ctx.examples {
                members[e].push(k as u32);
            }
        }
        let mut targets: Vec<Vec<StatisticsMatrix>> = frontier
            .iter()
            .map(|(_, ctx)| vec![StatisticsMatrix::for_dataset(dataset, 1); ctx.parts(n)])
            .collect();
        let mut accs: Vec<NodeAccumulator> = frontier
            .iter()
            .zip(&tests)
            .map(|((_, ctx), t)| NodeAccumulator::new(dataset, t, ctx.parts(n)))
            .collect();
        for (e, nodes) in members.iter().enumerate() {
            if nodes.is_empty() {
                continue;
            }
            let target = dataset.target_value(e);
            for &k in nodes {
                let k = k as usize;
                let part = frontier[k].1.part_of(folds, e);
                crate::splits::update_statistics(&mut targets[k][part], 0, target)?;
                accs[k].add_example(e, part);
            }
            profile.counters.max_node_memberships =
                profile.counters.max_node_memberships.max(nodes.len() as u64);
        }
        let evaluations: u64 = frontier
            .iter()
            .zip(&tests)
            .map(|((_, ctx), t)| (t.len() * ctx.examples.len()) as u64)
            .sum();
        profile.counters.evaluations += evaluations;
        let pass_time = pass_start.elapsed();
        profile.counters.accumulate_time += pass_time;
        let work = profile.level_mut(level);
        work.refine_time += pass_time;
        work.evaluations += evaluations;

        let mut next = Vec::new();
        for (((id, ctx), node_tests), (acc, node_targets)) in frontier
            .into_iter()
            .zip(tests.iter())
            .zip(accs.into_iter().zip(targets))
        {
            let start = Instant::now();
            let matrices = acc.finish();
            let refinement = resolve(
                &ctx,
                &node_targets,
                |_| Ok((node_tests.clone(), PartStatistics::from_matrices(ctx.parts(n), node_tests.len(), matrices)?)),
                dataset,
                folds,
                config,
                &mut profile.counters,
            )?;
            profile.record_node(level, start.elapsed(), 0);
            next.extend(attach(&mut forest, id, ctx.examples.len(), refinement));
        }
        frontier = next;
    }
    forest.profile = profile;
    Ok(forest)
}

/// Builds the forest with the configured variant.
pub fn grow_forest(dataset: &Dataset, folds: &FoldAssignment, config: &InductionConfig) -> Result<Forest> {
    match config.variant {
        Variant::DepthFirst => grow_forest_depth_first(dataset, folds, config),
        Variant::LevelWise => grow_forest_level_wise(dataset, folds, config),
    }
}

/// Ordinary top-down induction of one tree on `training_view`.
pub fn grow_tree_serial(dataset: &Dataset, training_view: &[usize], config: &InductionConfig) -> Result<Tree> {
    config.validate(dataset)?;
    if training_view.is_empty() {
        return Err(Error::Config("training view is empty".into()));
    }
    let mut tree = Tree::new();
    let mut profile = BuildProfile::default();
    let placeholder = || TreeNode::Leaf(Leaf::Regression { mean: 0.0, count: 0 });
    let root = tree.push(placeholder());
    let mut work: Vec<(usize, Vec<usize>, usize, Option<Leaf>)> = vec![(root, training_view.to_vec(), 0, None)];
    while let Some((id, examples, depth, fallback)) = work.pop() {
        let start = Instant::now();
        let before = profile.counters.evaluations;
        let targets = accumulate_targets(dataset, &examples, 1, |_| 0).remove(0);
        let here = Leaf::from_targets(&targets, fallback.as_ref());
        let slice = NodeSlice::from_targets(0, &targets);
        let mut children = Vec::new();
        let node = if slice.stops(config.min_examples) {
            TreeNode::Leaf(here)
        } else {
            let tests = enumerate_tests(dataset, &examples);
            let acc_start = Instant::now();
            let mut acc = NodeAccumulator::new(dataset, &tests, 1);
            for t in 0..tests.len() {
                acc.accumulate_test(t, &examples, |_| 0);
            }
            profile.counters.evaluations += (tests.len() * examples.len()) as u64;
            let stats = acc.finish();
            profile.counters.accumulate_time += acc_start.elapsed();
            let scores = stats
                .iter()
                .map(|s| compute_quality(s, config.measure))
                .collect::<Result<Vec<f64>>>()?;
            match choose(&scores, slice, config.min_examples) {
                Choice::Leaf => TreeNode::Leaf(here),
                Choice::Test(t) => {
                    let test = tests[t];
                    let buckets = partition_examples(&examples, &test, dataset, &mut profile.counters);
                    let ids = buckets
                        .into_iter()
                        .map(|bucket| {
                            let cid = tree.push(placeholder());
                            children.push((cid, bucket, depth + 1, Some(here.clone())));
                            cid
                        })
                        .collect();
                    TreeNode::Split { test, children: ids }
                }
            }
        };
        tree.set(id, node);
        profile.record_node(depth, start.elapsed(), profile.counters.evaluations - before);
        work.extend(children.into_iter().rev());
    }
    tree.profile = profile;
    Ok(tree)
}

/// The actual tree and every fold's tree, built one after another.
#[derive(Debug, Clone)]
pub struct SerialRun {
    pub actual: Tree,
    /// Trees for folds `1..=n`, in order.
    pub folds: Vec<Tree>,
    /// Work summed over all `n + 1` builds.
    pub profile: BuildProfile,
    pub actual_time: Duration,
    pub fold_times: Vec<Duration>,
    pub total_time: Duration,
}

impl SerialRun {
    /// Tree of fold `i`, `0` being the actual tree.
    pub fn tree(&self, i: usize) -> &Tree {
        if i == 0 {
            &self.actual
        } else {
            &self.folds[i - 1]
        }
    }
}

pub fn run_serial_cross_validation(
    dataset: &Dataset,
    folds: &FoldAssignment,
    config: &InductionConfig,
) -> Result<SerialRun> {
    config.validate(dataset)?;
    check_folds(dataset, folds)?;
    let total_start = Instant::now();
    let start = Instant::now();
    let actual = grow_tree_serial(dataset, &data::training_view(dataset, folds, 0)?, config)?;
    let actual_time = start.elapsed();
    let mut profile = actual.profile.clone();
    let mut trees = Vec::with_capacity(folds.n());
    let mut fold_times = Vec::with_capacity(folds.n());
    for i in 1..=folds.n() {
        let start = Instant::now();
        let tree = grow_tree_serial(dataset, &data::training_view(dataset, folds, i)?, config)?;
        fold_times.push(start.elapsed());
        profile.merge(&tree.profile);
        trees.push(tree);
    }
    Ok(SerialRun {
        actual,
        folds: trees,
        profile,
        actual_time,
        fold_times,
        total_time: total_start.elapsed(),
    })
}
