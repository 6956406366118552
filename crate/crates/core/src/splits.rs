//! Candidate tests, additive split statistics and test quality.
//!
//! Statistics are gathered per held-out part `D_i` and the statistics of
//! each training set are then derived without touching the data again:
//! `S(T_0) = sum_i S(D_i)` and `S(T_i) = S(T_0) - S(D_i)`. Class statistics
//! are integer counts, so the subtraction is exact.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{AttrValue, AttributeKind, Column, Dataset, FoldAssignment, TargetColumn, TargetKind, TargetValue};
use crate::error::{Error, Result};
use crate::instrument::Counters;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestForm {
    /// Outcome is the attribute's value index.
    Discrete { arity: usize },
    /// Outcome 0 when `value < threshold`, 1 otherwise.
    Threshold { threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Test {
    pub attribute: usize,
    #[serde(flatten)]
    pub form: TestForm,
}

impl Test {
    pub fn discrete(attribute: usize, arity: usize) -> Self {
        Test {
            attribute,
            form: TestForm::Discrete { arity },
        }
    }

    pub fn threshold(attribute: usize, threshold: f64) -> Self {
        Test {
            attribute,
            form: TestForm::Threshold { threshold },
        }
    }

    pub fn arity(&self) -> usize {
        match self.form {
            TestForm::Discrete { arity } => arity,
            TestForm::Threshold { .. } => 2,
        }
    }

    /// Outcome for an example of `dataset`.
    #[inline]
    pub fn outcome(&self, dataset: &Dataset, example: usize) -> usize {
        match (self.form, dataset.column(self.attribute)) {
            (TestForm::Discrete { .. }, Column::Discrete(codes)) => codes[example] as usize,
            (TestForm::Threshold { threshold }, Column::Numeric(values)) => {
                usize::from(values[example] >= threshold)
            }
            _ => unreachable!("tests are enumerated from the dataset's own schema"),
        }
    }

    /// Outcome for a free-standing attribute value; `None` if the value's
    /// kind or range does not fit the test.
    pub fn outcome_of(&self, value: AttrValue) -> Option<usize> {
        match (self.form, value) {
            (TestForm::Discrete { arity }, AttrValue::Discrete(code)) => {
                ((code as usize) < arity).then_some(code as usize)
            }
            (TestForm::Threshold { threshold }, AttrValue::Numeric(v)) => {
                Some(usize::from(v >= threshold))
            }
            _ => None,
        }
    }
}

/// Candidate tests at a node, in schema order with thresholds ascending.
///
/// Discrete attributes give one test each (attributes whose domain has a
/// single value are skipped, they cannot split). Numeric attributes give one
/// threshold per midpoint between consecutive distinct values among
/// `node_examples`.
pub fn enumerate_tests(dataset: &Dataset, node_examples: &[usize]) -> Vec<Test> {
    let mut tests = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (a, attr) in dataset.schema().attributes.iter().enumerate() {
        match (&attr.kind, dataset.column(a)) {
            (AttributeKind::Discrete { domain }, _) => {
                if domain.len() >= 2 {
                    tests.push(Test::discrete(a, domain.len()));
                }
            }
            (AttributeKind::Numeric, Column::Numeric(column)) => {
                values.clear();
                values.extend(node_examples.iter().map(|&e| column[e]));
                values.sort_by(|x, y| x.total_cmp(y));
                values.dedup();
                tests.extend(
                    values
                        .windows(2)
                        .map(|w| Test::threshold(a, w[0] + (w[1] - w[0]) / 2.0)),
                );
            }
            (AttributeKind::Numeric, Column::Discrete(_)) => {
                unreachable!("column kinds are validated on construction")
            }
        }
    }
    tests
}

/// Sufficient statistics for a numeric target: `(sum y^2, sum y, count)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub sum_sq: f64,
    pub sum: f64,
    pub count: u64,
}

impl Moments {
    #[inline]
    fn push(&mut self, y: f64) {
        self.sum_sq += y * y;
        self.sum += y;
        self.count += 1;
    }

    fn add(&mut self, other: &Moments) {
        self.sum_sq += other.sum_sq;
        self.sum += other.sum;
        self.count += other.count;
    }

    fn sub(&self, other: &Moments) -> Moments {
        Moments {
            sum_sq: self.sum_sq - other.sum_sq,
            sum: self.sum - other.sum,
            count: self.count - other.count,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Population variance, clamped at zero.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let c = self.count as f64;
        let mean = self.sum / c;
        (self.sum_sq / c - mean * mean).max(0.0)
    }

    /// Magnitude against which variance rounding noise is judged.
    fn scale(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum_sq / self.count as f64
        }
    }
}

/// Relative band below which variance figures are treated as rounding noise.
const VARIANCE_NOISE: f64 = 1e-10;
/// Information gains below this are rounding noise from proportional rows.
const GAIN_NOISE: f64 = 1e-12;

/// Additive statistics of one test over one example set: class counts per
/// `(outcome, class)`, or [`Moments`] per outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StatisticsMatrix {
    Class {
        outcomes: usize,
        classes: usize,
        counts: Vec<u64>,
    },
    Numeric {
        cells: Vec<Moments>,
    },
}

impl StatisticsMatrix {
    pub fn class(outcomes: usize, classes: usize) -> Self {
        StatisticsMatrix::Class {
            outcomes,
            classes,
            counts: vec![0; outcomes * classes],
        }
    }

    pub fn numeric(outcomes: usize) -> Self {
        StatisticsMatrix::Numeric {
            cells: vec![Moments::default(); outcomes],
        }
    }

    pub fn for_dataset(dataset: &Dataset, outcomes: usize) -> Self {
        match dataset.target_kind() {
            TargetKind::Class => Self::class(outcomes, dataset.schema().num_classes()),
            TargetKind::Numeric => Self::numeric(outcomes),
        }
    }

    pub fn outcomes(&self) -> usize {
        match self {
            StatisticsMatrix::Class { outcomes, .. } => *outcomes,
            StatisticsMatrix::Numeric { cells } => cells.len(),
        }
    }

    /// Number of examples accumulated.
    pub fn total(&self) -> u64 {
        match self {
            StatisticsMatrix::Class { counts, .. } => counts.iter().sum(),
            StatisticsMatrix::Numeric { cells } => cells.iter().map(|m| m.count).sum(),
        }
    }

    pub fn count(&self, outcome: usize, class: usize) -> u64 {
        match self {
            StatisticsMatrix::Class { classes, counts, .. } => counts[outcome * classes + class],
            StatisticsMatrix::Numeric { .. } => 0,
        }
    }

    pub fn moments(&self, outcome: usize) -> Option<Moments> {
        match self {
            StatisticsMatrix::Numeric { cells } => Some(cells[outcome]),
            StatisticsMatrix::Class { .. } => None,
        }
    }

    fn same_shape(&self, other: &StatisticsMatrix) -> bool {
        match (self, other) {
            (
                StatisticsMatrix::Class {
                    outcomes: a,
                    classes: b,
                    ..
                },
                StatisticsMatrix::Class {
                    outcomes: c,
                    classes: d,
                    ..
                },
            ) => a == c && b == d,
            (StatisticsMatrix::Numeric { cells: a }, StatisticsMatrix::Numeric { cells: b }) => {
                a.len() == b.len()
            }
            _ => false,
        }
    }

    fn shape_error(&self, other: &StatisticsMatrix) -> Error {
        Error::ShapeMismatch(format!(
            "{} outcomes ({}) vs {} outcomes ({})",
            self.outcomes(),
            self.kind_name(),
            other.outcomes(),
            other.kind_name()
        ))
    }

    fn kind_name(&self) -> &'static str {
        match self {
            StatisticsMatrix::Class { .. } => "class",
            StatisticsMatrix::Numeric { .. } => "numeric",
        }
    }

    /// Element-wise sum.
    pub fn add_assign(&mut self, other: &StatisticsMatrix) -> Result<()> {
        if !self.same_shape(other) {
            return Err(self.shape_error(other));
        }
        match (self, other) {
            (StatisticsMatrix::Class { counts: a, .. }, StatisticsMatrix::Class { counts: b, .. }) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
            (StatisticsMatrix::Numeric { cells: a }, StatisticsMatrix::Numeric { cells: b }) => {
                a.iter_mut().zip(b).for_each(|(x, y)| x.add(y));
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    /// Element-wise difference; `other` must be a sub-collection of `self`.
    pub fn subtract(&self, other: &StatisticsMatrix) -> Result<StatisticsMatrix> {
        if !self.same_shape(other) {
            return Err(self.shape_error(other));
        }
        Ok(match (self, other) {
            (
                StatisticsMatrix::Class {
                    outcomes,
                    classes,
                    counts: a,
                },
                StatisticsMatrix::Class { counts: b, .. },
            ) => StatisticsMatrix::Class {
                outcomes: *outcomes,
                classes: *classes,
                counts: a.iter().zip(b).map(|(x, y)| x - y).collect(),
            },
            (StatisticsMatrix::Numeric { cells: a }, StatisticsMatrix::Numeric { cells: b }) => {
                StatisticsMatrix::Numeric {
                    cells: a.iter().zip(b).map(|(x, y)| x.sub(y)).collect(),
                }
            }
            _ => unreachable!(),
        })
    }

    /// Collapses outcomes: per-class counts, or the overall moments.
    pub fn marginal(&self) -> StatisticsMatrix {
        match self {
            StatisticsMatrix::Class {
                outcomes,
                classes,
                counts,
            } => {
                let mut out = vec![0; *classes];
                for j in 0..*outcomes {
                    for (c, slot) in out.iter_mut().enumerate() {
                        *slot += counts[j * classes + c];
                    }
                }
                StatisticsMatrix::Class {
                    outcomes: 1,
                    classes: *classes,
                    counts: out,
                }
            }
            StatisticsMatrix::Numeric { cells } => {
                let mut m = Moments::default();
                cells.iter().for_each(|c| m.add(c));
                StatisticsMatrix::Numeric { cells: vec![m] }
            }
        }
    }

    /// True if every accumulated example has the same target value.
    pub fn is_pure(&self) -> bool {
        match self.marginal() {
            StatisticsMatrix::Class { counts, .. } => counts.iter().filter(|&&c| c > 0).count() <= 1,
            StatisticsMatrix::Numeric { cells } => {
                let m = cells[0];
                m.count <= 1 || m.variance() <= VARIANCE_NOISE * m.scale()
            }
        }
    }
}

/// Records one example's outcome and target in `stats`.
pub fn update_statistics(
    stats: &mut StatisticsMatrix,
    outcome: usize,
    target: TargetValue,
) -> Result<()> {
    let arity = stats.outcomes();
    if outcome >= arity {
        return Err(Error::OutcomeOutOfRange { outcome, arity });
    }
    match (stats, target) {
        (StatisticsMatrix::Class { classes, counts, .. }, TargetValue::Class(c)) => {
            if c as usize >= *classes {
                return Err(Error::SchemaMismatch(format!(
                    "class {c} outside {classes} classes"
                )));
            }
            counts[outcome * *classes + c as usize] += 1;
        }
        (StatisticsMatrix::Numeric { cells }, TargetValue::Numeric(y)) => cells[outcome].push(y),
        _ => {
            return Err(Error::SchemaMismatch(
                "target value kind does not match the statistics".into(),
            ))
        }
    }
    Ok(())
}

enum Buffer {
    Class { cells: usize, counts: Vec<u64> },
    Numeric { cells: usize, moments: Vec<Moments> },
}

/// Flat per-node accumulation buffers, laid out `[test][part][cell]`.
///
/// Examples can be fed test by test (`accumulate_test`) or one example at
/// a time across all tests (`add_example`); either way every cell receives
/// its examples in the order they are fed.
pub(crate) struct NodeAccumulator<'a> {
    dataset: &'a Dataset,
    tests: &'a [Test],
    parts: usize,
    buffers: Vec<Buffer>,
}

impl<'a> NodeAccumulator<'a> {
    pub(crate) fn new(dataset: &'a Dataset, tests: &'a [Test], parts: usize) -> Self {
        let k = dataset.schema().num_classes();
        let buffers = tests
            .iter()
            .map(|t| match dataset.target_kind() {
                TargetKind::Class => Buffer::Class {
                    cells: t.arity() * k,
                    counts: vec![0; parts * t.arity() * k],
                },
                TargetKind::Numeric => Buffer::Numeric {
                    cells: t.arity(),
                    moments: vec![Moments::default(); parts * t.arity()],
                },
            })
            .collect();
        NodeAccumulator {
            dataset,
            tests,
            parts,
            buffers,
        }
    }

    /// Scans `examples` for test `t`, charging each to part `part_of(e)`.
    pub(crate) fn accumulate_test<P: Fn(usize) -> usize>(&mut self, t: usize, examples: &[usize], part_of: P) {
        let test = self.tests[t];
        let ds = self.dataset;
        let k = ds.schema().num_classes();
        match (test.form, ds.column(test.attribute), ds.target_column(), &mut self.buffers[t]) {
            (TestForm::Discrete { .. }, Column::Discrete(codes), TargetColumn::Class(y), Buffer::Class { cells, counts }) => {
                tally_counts(examples, |e| codes[e] as usize, &part_of, y, k, *cells, counts)
            }
            (TestForm::Threshold { threshold }, Column::Numeric(v), TargetColumn::Class(y), Buffer::Class { cells, counts }) => {
                tally_counts(examples, |e| usize::from(v[e] >= threshold), &part_of, y, k, *cells, counts)
            }
            (TestForm::Discrete { .. }, Column::Discrete(codes), TargetColumn::Numeric(y), Buffer::Numeric { cells, moments }) => {
                tally_moments(examples, |e| codes[e] as usize, &part_of, y, *cells, moments)
            }
            (TestForm::Threshold { threshold }, Column::Numeric(v), TargetColumn::Numeric(y), Buffer::Numeric { cells, moments }) => {
                tally_moments(examples, |e| usize::from(v[e] >= threshold), &part_of, y, *cells, moments)
            }
            _ => unreachable!("tests are enumerated from the dataset's own schema"),
        }
    }

    /// Adds one example to every test's statistics in `part`.
    pub(crate) fn add_example(&mut self, example: usize, part: usize) {
        let ds = self.dataset;
        let target = ds.target_value(example);
        let k = ds.schema().num_classes();
        for (test, buf) in self.tests.iter().zip(self.buffers.iter_mut()) {
            let outcome = test.outcome(ds, example);
            match (buf, target) {
                (Buffer::Class { cells, counts }, TargetValue::Class(c)) => {
                    counts[part * *cells + outcome * k + c as usize] += 1
                }
                (Buffer::Numeric { cells, moments }, TargetValue::Numeric(y)) => {
                    moments[part * *cells + outcome].push(y)
                }
                _ => unreachable!(),
            }
        }
    }

    /// Per-part matrices, laid out `[part][test]`.
    pub(crate) fn finish(self) -> Vec<StatisticsMatrix> {
        let k = self.dataset.schema().num_classes();
        let n_tests = self.tests.len();
        let mut out: Vec<Option<StatisticsMatrix>> = vec![None; self.parts * n_tests];
        for (t, (test, buf)) in self.tests.iter().zip(self.buffers).enumerate() {
            match buf {
                Buffer::Class { cells, counts } => {
                    for (p, chunk) in counts.chunks_exact(cells).enumerate() {
                        out[p * n_tests + t] = Some(StatisticsMatrix::Class {
                            outcomes: test.arity(),
                            classes: k,
                            counts: chunk.to_vec(),
                        });
                    }
                }
                Buffer::Numeric { cells, moments } => {
                    for (p, chunk) in moments.chunks_exact(cells).enumerate() {
                        out[p * n_tests + t] = Some(StatisticsMatrix::Numeric { cells: chunk.to_vec() });
                    }
                }
            }
        }
        out.into_iter().map(|m| m.expect("every cell is filled")).collect()
    }
}

#[inline]
fn tally_counts<O: Fn(usize) -> usize, P: Fn(usize) -> usize>(
    examples: &[usize],
    outcome: O,
    part_of: &P,
    y: &[u32],
    k: usize,
    cells: usize,
    counts: &mut [u64],
) {
    for &e in examples {
        counts[part_of(e) * cells + outcome(e) * k + y[e] as usize] += 1;
    }
}

#[inline]
fn tally_moments<O: Fn(usize) -> usize, P: Fn(usize) -> usize>(
    examples: &[usize],
    outcome: O,
    part_of: &P,
    y: &[f64],
    cells: usize,
    moments: &mut [Moments],
) {
    for &e in examples {
        moments[part_of(e) * cells + outcome(e)].push(y[e]);
    }
}

/// Target-only statistics (a single outcome) per part.
pub(crate) fn accumulate_targets<P: Fn(usize) -> usize>(
    dataset: &Dataset,
    examples: &[usize],
    parts: usize,
    part_of: P,
) -> Vec<StatisticsMatrix> {
    let mut out = vec![StatisticsMatrix::for_dataset(dataset, 1); parts];
    match dataset.target_column() {
        TargetColumn::Class(y) => {
            for &e in examples {
                if let StatisticsMatrix::Class { counts, .. } = &mut out[part_of(e)] {
                    counts[y[e] as usize] += 1;
                }
            }
        }
        TargetColumn::Numeric(y) => {
            for &e in examples {
                if let StatisticsMatrix::Numeric { cells } = &mut out[part_of(e)] {
                    cells[0].push(y[e]);
                }
            }
        }
    }
    out
}

/// `S[D_i, t]` for parts `i = 1..=n` and the node's tests.
#[derive(Debug, Clone, PartialEq)]
pub struct PartStatistics {
    n: usize,
    tests: usize,
    matrices: Vec<StatisticsMatrix>,
}

impl PartStatistics {
    /// Wraps matrices laid out `[part][test]`.
    pub fn from_matrices(n: usize, tests: usize, matrices: Vec<StatisticsMatrix>) -> Result<Self> {
        if matrices.len() != n * tests {
            return Err(Error::ShapeMismatch(format!(
                "{} matrices for {n} parts x {tests} tests",
                matrices.len()
            )));
        }
        Ok(PartStatistics { n, tests, matrices })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tests(&self) -> usize {
        self.tests
    }

    /// Statistics of part `D_i` (`i` in `1..=n`) for test `t`.
    pub fn get(&self, i: usize, t: usize) -> &StatisticsMatrix {
        assert!(i >= 1 && i <= self.n, "part index {i} outside 1..={}", self.n);
        &self.matrices[(i - 1) * self.tests + t]
    }

    /// `S(D)` for every test: the sum over all parts.
    pub fn pooled(&self) -> Result<Vec<StatisticsMatrix>> {
        let mut total: Vec<StatisticsMatrix> = self.matrices[..self.tests].to_vec();
        for i in 1..self.n {
            for (t, acc) in total.iter_mut().enumerate() {
                acc.add_assign(&self.matrices[i * self.tests + t])?;
            }
        }
        Ok(total)
    }

    /// `S(T_i)` for one fold, given the pooled statistics.
    pub(crate) fn training(&self, pooled: &[StatisticsMatrix], i: usize, t: usize) -> Result<StatisticsMatrix> {
        if i == 0 {
            Ok(pooled[t].clone())
        } else {
            pooled[t].subtract(self.get(i, t))
        }
    }
}

/// `S[T_i, t]` for training sets `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingStatistics {
    n: usize,
    tests: usize,
    matrices: Vec<StatisticsMatrix>,
}

impl TrainingStatistics {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tests(&self) -> usize {
        self.tests
    }

    /// Statistics of training set `T_i` (`i` in `0..=n`) for test `t`.
    pub fn get(&self, i: usize, t: usize) -> &StatisticsMatrix {
        assert!(i <= self.n, "fold index {i} outside 0..={}", self.n);
        &self.matrices[i * self.tests + t]
    }
}

/// Accumulates `S[D_i, t]` over `node_examples`: every example is evaluated
/// once per test and charged only to its own held-out part.
pub fn accumulate_fold_statistics(
    dataset: &Dataset,
    folds: &FoldAssignment,
    node_examples: &[usize],
    tests: &[Test],
    counters: &mut Counters,
) -> PartStatistics {
    let start = Instant::now();
    let mut acc = NodeAccumulator::new(dataset, tests, folds.n());
    for t in 0..tests.len() {
        acc.accumulate_test(t, node_examples, |e| folds.fold_of(e) - 1);
    }
    counters.evaluations += (tests.len() * node_examples.len()) as u64;
    let matrices = acc.finish();
    counters.accumulate_time += start.elapsed();
    PartStatistics {
        n: folds.n(),
        tests: tests.len(),
        matrices,
    }
}

/// Derives `S[T_i, t]` for `i = 0..=n` from the per-part statistics alone.
pub fn derive_training_statistics(per_part: &PartStatistics) -> Result<TrainingStatistics> {
    let pooled = per_part.pooled()?;
    let mut matrices = pooled.clone();
    for i in 1..=per_part.n {
        for (t, whole) in pooled.iter().enumerate() {
            matrices.push(whole.subtract(per_part.get(i, t))?);
        }
    }
    Ok(TrainingStatistics {
        n: per_part.n,
        tests: per_part.tests,
        matrices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    #[serde(rename = "gain")]
    InformationGain,
    #[serde(rename = "gainratio")]
    GainRatio,
    #[serde(rename = "variance")]
    VarianceReduction,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::InformationGain => "gain",
            Measure::GainRatio => "gainratio",
            Measure::VarianceReduction => "variance",
        }
    }

    pub fn target_kind(self) -> TargetKind {
        match self {
            Measure::InformationGain | Measure::GainRatio => TargetKind::Class,
            Measure::VarianceReduction => TargetKind::Numeric,
        }
    }

    /// Information gain for class targets, variance reduction otherwise.
    pub fn default_for(kind: TargetKind) -> Measure {
        match kind {
            TargetKind::Class => Measure::InformationGain,
            TargetKind::Numeric => Measure::VarianceReduction,
        }
    }
}

/// Shannon entropy in bits of a count vector; `0 log 0 = 0`.
pub fn entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

fn class_gain(outcomes: usize, classes: usize, counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let totf = total as f64;
    let mut marginal_h = 0.0;
    for c in 0..classes {
        let m: u64 = (0..outcomes).map(|j| counts[j * classes + c]).sum();
        if m > 0 {
            let p = m as f64 / totf;
            marginal_h -= p * p.log2();
        }
    }
    let mut conditional = 0.0;
    let mut split_info = 0.0;
    for row in counts.chunks_exact(classes) {
        let size: u64 = row.iter().sum();
        if size > 0 {
            let w = size as f64 / totf;
            conditional += w * entropy(row);
            split_info -= w * w.log2();
        }
    }
    let gain = marginal_h - conditional;
    let gain = if gain < GAIN_NOISE { 0.0 } else { gain };
    (gain, split_info)
}

/// Scores a test from its statistics alone.
///
/// Information gain and gain ratio are in bits; gain ratio is 0 when the
/// split information is 0. Variance reduction is `Var(all) - sum_j w_j Var_j`.
/// Values inside the rounding-noise band around zero are reported as 0.
pub fn compute_quality(stats: &StatisticsMatrix, measure: Measure) -> Result<f64> {
    if stats.total() == 0 {
        return Err(Error::EmptyStatistics);
    }
    match (stats, measure) {
        (
            StatisticsMatrix::Class {
                outcomes,
                classes,
                counts,
            },
            Measure::InformationGain,
        ) => Ok(class_gain(*outcomes, *classes, counts).0),
        (
            StatisticsMatrix::Class {
                outcomes,
                classes,
                counts,
            },
            Measure::GainRatio,
        ) => {
            let (gain, split_info) = class_gain(*outcomes, *classes, counts);
            if gain == 0.0 || split_info <= 0.0 {
                Ok(0.0)
            } else {
                Ok(gain / split_info)
            }
        }
        (StatisticsMatrix::Numeric { cells }, Measure::VarianceReduction) => {
            let mut all = Moments::default();
            cells.iter().for_each(|c| all.add(c));
            let total = all.count as f64;
            let within: f64 = cells
                .iter()
                .filter(|c| c.count > 0)
                .map(|c| c.count as f64 / total * c.variance())
                .sum();
            let reduction = all.variance() - within;
            if reduction.abs() <= VARIANCE_NOISE * all.scale() {
                Ok(0.0)
            } else {
                Ok(reduction)
            }
        }
        (StatisticsMatrix::Class { .. }, m) | (StatisticsMatrix::Numeric { .. }, m) => {
            Err(Error::MeasureMismatch {
                measure: m.name(),
                target: stats.kind_name(),
            })
        }
    }
}

/// `Q[T_i, t]` for the folds active at a node.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityTable {
    pub measure: Measure,
    /// Fold indices, one row each.
    pub folds: Vec<usize>,
    pub tests: usize,
    scores: Vec<f64>,
}

impl QualityTable {
    pub fn new(measure: Measure, folds: Vec<usize>, tests: usize, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != folds.len() * tests {
            return Err(Error::ShapeMismatch(format!(
                "{} scores for {} folds x {tests} tests",
                scores.len(),
                folds.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("quality scores must be finite".into()));
        }
        Ok(QualityTable {
            measure,
            folds,
            tests,
            scores,
        })
    }

    /// Scores every (fold, test) pair from training statistics.
    pub fn from_training(stats: &TrainingStatistics, folds: &[usize], measure: Measure) -> Result<Self> {
        let mut scores = Vec::with_capacity(folds.len() * stats.tests());
        for &i in folds {
            for t in 0..stats.tests() {
                let s = stats.get(i, t);
                scores.push(if s.total() == 0 { 0.0 } else { compute_quality(s, measure)? });
            }
        }
        QualityTable::new(measure, folds.to_vec(), stats.tests(), scores)
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.scores[row * self.tests..(row + 1) * self.tests]
    }

    pub fn score(&self, row: usize, t: usize) -> f64 {
        self.scores[row * self.tests + t]
    }
}

/// What one fold does at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Choice {
    /// Index into the node's candidate test list.
    Test(usize),
    Leaf,
}

/// Stop-criterion inputs for one fold's slice of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSlice {
    pub fold: usize,
    pub count: u64,
    pub pure: bool,
    /// Absolute score gap below which two tests count as tied.
    pub tie_band: f64,
}

impl NodeSlice {
    pub fn from_targets(fold: usize, targets: &StatisticsMatrix) -> Self {
        let tie_band = match targets.marginal() {
            StatisticsMatrix::Numeric { cells } => SCORE_TIE * cells[0].scale(),
            StatisticsMatrix::Class { .. } => 0.0,
        };
        NodeSlice {
            fold,
            count: targets.total(),
            pure: targets.is_pure(),
            tie_band,
        }
    }

    pub fn stops(&self, min_examples: u64) -> bool {
        self.pure || self.count < min_examples
    }
}

/// Scores closer than this, relative to the larger score or, for regression,
/// to the node's mean square target, are tied. Derived and directly
/// accumulated moments round differently, and two tests that split a node
/// identically must not be told apart by that rounding.
pub const SCORE_TIE: f64 = 1e-9;

/// One fold's choice: leaf when the stop criterion holds or no score is
/// positive, otherwise the best test with ties going to the lowest index.
pub fn choose(scores: &[f64], slice: NodeSlice, min_examples: u64) -> Choice {
    if slice.stops(min_examples) {
        return Choice::Leaf;
    }
    let mut best: Option<(usize, f64)> = None;
    for (t, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b + (SCORE_TIE * b.abs()).max(slice.tie_band)) {
            best = Some((t, s));
        }
    }
    match best {
        Some((t, s)) if s > 0.0 => Choice::Test(t),
        _ => Choice::Leaf,
    }
}

/// Applies [`choose`] to every row of `q`; `slices` are aligned with `q.folds`.
pub fn best_choice_per_fold(q: &QualityTable, slices: &[NodeSlice], min_examples: u64) -> Vec<Choice> {
    debug_assert_eq!(q.folds.len(), slices.len());
    slices
        .iter()
        .enumerate()
        .map(|(row, &slice)| choose(q.row(row), slice, min_examples))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Attribute, Schema, Target};
    use proptest::prelude::*;

    fn class_matrix(outcomes: usize, classes: usize, counts: Vec<u64>) -> StatisticsMatrix {
        StatisticsMatrix::Class {
            outcomes,
            classes,
            counts,
        }
    }

    fn numeric_ds(values: Vec<f64>) -> Dataset {
        let n = values.len();
        let schema = Schema::new(
            vec![Attribute::numeric("x"), Attribute::discrete("d", vec!["a".into(), "b".into(), "c".into()])],
            Target::class("y", vec!["neg".into(), "pos".into()]),
        )
        .unwrap();
        Dataset::new(
            schema,
            vec![
                Column::Numeric(values),
                Column::Discrete((0..n).map(|i| (i % 3) as u32).collect()),
            ],
            TargetColumn::Class((0..n).map(|i| (i % 2) as u32).collect()),
        )
        .unwrap()
    }

    #[test]
    fn discrete_attribute_gives_one_test() {
        let ds = numeric_ds(vec![1.0; 4]);
        let tests = enumerate_tests(&ds, &[0, 1, 2, 3]);
        assert_eq!(tests, vec![Test::discrete(1, 3)]);
    }

    #[test]
    fn thresholds_are_midpoints() {
        let ds = numeric_ds(vec![7.0, 1.0, 3.0, 3.0, 1.0]);
        let all: Vec<usize> = (0..5).collect();
        // midpoint oracle: sorted distinct {1, 3, 7}
        let mut distinct = vec![1.0, 3.0, 7.0];
        distinct.dedup();
        let expected: Vec<f64> = distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        let thresholds: Vec<f64> = enumerate_tests(&ds, &all)
            .into_iter()
            .filter_map(|t| match t.form {
                TestForm::Threshold { threshold } => Some(threshold),
                _ => None,
            })
            .collect();
        assert_eq!(thresholds, expected);
        assert_eq!(thresholds, vec![2.0, 5.0]);
        // only the node's own examples count
        let sub = enumerate_tests(&ds, &[1, 2]);
        assert_eq!(sub[0], Test::threshold(0, 2.0));
    }

    #[test]
    fn test_outcomes_are_total() {
        let ds = numeric_ds(vec![1.0, 2.0, 3.0]);
        let t = Test::threshold(0, 2.0);
        assert_eq!(t.outcome(&ds, 0), 0);
        assert_eq!(t.outcome(&ds, 1), 1);
        assert_eq!(t.outcome_of(AttrValue::Numeric(1.5)), Some(0));
        assert_eq!(t.outcome_of(AttrValue::Discrete(0)), None);
        assert_eq!(Test::discrete(1, 3).outcome_of(AttrValue::Discrete(3)), None);
    }

    #[test]
    fn constant_numeric_attribute_gives_no_tests() {
        let ds = numeric_ds(vec![4.0; 6]);
        let tests = enumerate_tests(&ds, &(0..6).collect::<Vec<_>>());
        assert!(tests.iter().all(|t| t.attribute != 0));
    }

    #[test]
    fn single_class_increment() {
        let mut s = StatisticsMatrix::class(2, 2);
        update_statistics(&mut s, 1, TargetValue::Class(1)).unwrap();
        assert_eq!(s, class_matrix(2, 2, vec![0, 0, 0, 1]));
        assert!(matches!(
            update_statistics(&mut s, 2, TargetValue::Class(0)),
            Err(Error::OutcomeOutOfRange { outcome: 2, arity: 2 })
        ));
        assert!(update_statistics(&mut s, 0, TargetValue::Numeric(1.0)).is_err());
    }

    #[test]
    fn numeric_triple_increment() {
        let mut s = StatisticsMatrix::Numeric {
            cells: vec![Moments { sum_sq: 14.0, sum: 6.0, count: 3 }],
        };
        update_statistics(&mut s, 0, TargetValue::Numeric(2.0)).unwrap();
        assert_eq!(s.moments(0), Some(Moments { sum_sq: 18.0, sum: 8.0, count: 4 }));
    }

    #[test]
    fn subtraction_of_class_counts() {
        let d = class_matrix(2, 2, vec![3, 1, 0, 4]);
        let d1 = class_matrix(2, 2, vec![1, 0, 0, 2]);
        assert_eq!(d.subtract(&d1).unwrap(), class_matrix(2, 2, vec![2, 1, 0, 2]));
        assert!(d.subtract(&StatisticsMatrix::class(3, 2)).is_err());
        assert!(d.subtract(&StatisticsMatrix::numeric(2)).is_err());
    }

    #[test]
    fn two_parts_swap() {
        let a = class_matrix(2, 2, vec![1, 2, 3, 4]);
        let b = class_matrix(2, 2, vec![5, 0, 1, 1]);
        let parts = PartStatistics::from_matrices(2, 1, vec![a.clone(), b.clone()]).unwrap();
        let training = derive_training_statistics(&parts).unwrap();
        assert_eq!(training.get(1, 0), &b);
        assert_eq!(training.get(2, 0), &a);
        assert_eq!(training.get(0, 0), &class_matrix(2, 2, vec![6, 2, 4, 5]));
    }

    #[test]
    fn derive_rejects_mixed_shapes() {
        let parts = PartStatistics::from_matrices(
            2,
            1,
            vec![StatisticsMatrix::class(2, 2), StatisticsMatrix::class(3, 2)],
        )
        .unwrap();
        assert!(matches!(derive_training_statistics(&parts), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn gain_of_three_three_split() {
        // outcome 0 = 3 pos / 0 neg, outcome 1 = 1 pos / 2 neg (classes: neg, pos)
        let s = class_matrix(2, 2, vec![0, 3, 2, 1]);
        let gain = compute_quality(&s, Measure::InformationGain).unwrap();
        // 40-digit oracle: H(4/6) - 0.5 * H(1/3)
        assert!((gain - 0.459_147_917_027_244_8).abs() < 1e-12, "{gain}");
        // split information of a 3/3 split is exactly one bit
        let ratio = compute_quality(&s, Measure::GainRatio).unwrap();
        assert!((ratio - gain).abs() < 1e-12);
    }

    #[test]
    fn perfect_split_gains_one_bit() {
        let s = class_matrix(2, 2, vec![4, 0, 0, 4]);
        assert_eq!(compute_quality(&s, Measure::InformationGain).unwrap(), 1.0);
    }

    #[test]
    fn gain_ratio_zero_without_split_information() {
        let s = class_matrix(2, 2, vec![3, 5, 0, 0]);
        assert_eq!(compute_quality(&s, Measure::GainRatio).unwrap(), 0.0);
        assert_eq!(compute_quality(&s, Measure::InformationGain).unwrap(), 0.0);
    }

    #[test]
    fn proportional_rows_have_zero_gain() {
        let s = class_matrix(2, 2, vec![3, 6, 1, 2]);
        assert_eq!(compute_quality(&s, Measure::InformationGain).unwrap(), 0.0);
    }

    #[test]
    fn variance_from_triple() {
        let m = Moments { sum_sq: 14.0, sum: 6.0, count: 3 };
        // direct oracle over {1, 2, 3}
        let ys = [1.0f64, 2.0, 3.0];
        let mean = ys.iter().sum::<f64>() / 3.0;
        let direct = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / 3.0;
        assert!((m.variance() - direct).abs() < 1e-12);
        assert!((m.variance() - 2.0 / 3.0).abs() < 1e-12);
        let single = StatisticsMatrix::Numeric { cells: vec![m] };
        assert_eq!(compute_quality(&single, Measure::VarianceReduction).unwrap(), 0.0);
        let split = StatisticsMatrix::Numeric {
            cells: vec![Moments { sum_sq: 1.0, sum: 1.0, count: 1 }, Moments { sum_sq: 13.0, sum: 5.0, count: 2 }],
        };
        // Var{1,2,3} - (1/3 * 0 + 2/3 * Var{2,3})
        let expected = 2.0 / 3.0 - 2.0 / 3.0 * 0.25;
        assert!((compute_quality(&split, Measure::VarianceReduction).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn quality_errors() {
        assert!(matches!(
            compute_quality(&StatisticsMatrix::class(2, 2), Measure::InformationGain),
            Err(Error::EmptyStatistics)
        ));
        let s = class_matrix(1, 2, vec![1, 1]);
        assert!(matches!(
            compute_quality(&s, Measure::VarianceReduction),
            Err(Error::MeasureMismatch { .. })
        ));
    }

    #[test]
    fn unanimous_and_tied_choices() {
        let q = QualityTable::new(
            Measure::InformationGain,
            vec![0, 1, 2],
            3,
            vec![0.1, 0.5, 0.5, 0.2, 0.5, 0.5, 0.0, 0.5, 0.5],
        )
        .unwrap();
        let slices: Vec<NodeSlice> = (0..3).map(|f| NodeSlice { fold: f, count: 10, pure: false, tie_band: 0.0 }).collect();
        assert_eq!(best_choice_per_fold(&q, &slices, 2), vec![Choice::Test(1); 3]);
    }

    #[test]
    fn stop_rules() {
        let scores = [0.3, 0.1];
        let open = NodeSlice { fold: 1, count: 5, pure: false, tie_band: 0.0 };
        assert_eq!(choose(&scores, open, 2), Choice::Test(0));
        assert_eq!(choose(&scores, NodeSlice { pure: true, ..open }, 2), Choice::Leaf);
        assert_eq!(choose(&scores, NodeSlice { count: 1, ..open }, 2), Choice::Leaf);
        assert_eq!(choose(&[0.0, 0.0], open, 2), Choice::Leaf);
        assert_eq!(choose(&[], open, 2), Choice::Leaf);
    }

    #[test]
    fn pure_fold_part_makes_leaf() {
        // The only negative example sits in D_2, so T_1 = D_2 is mixed while
        // T_2 = D_1 is pure.
        let ds = Dataset::new(
            Schema::new(
                vec![Attribute::discrete("a", vec!["0".into(), "1".into()])],
                Target::class("y", vec!["neg".into(), "pos".into()]),
            )
            .unwrap(),
            vec![Column::Discrete(vec![0, 1, 0, 1, 0, 1])],
            TargetColumn::Class(vec![1, 1, 1, 1, 0, 1]),
        )
        .unwrap();
        let folds = FoldAssignment::from_folds(2, vec![1, 1, 1, 2, 2, 2]).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let tests = enumerate_tests(&ds, &all);
        let mut counters = Counters::default();
        let parts = accumulate_fold_statistics(&ds, &folds, &all, &tests, &mut counters);
        let training = derive_training_statistics(&parts).unwrap();
        let q = QualityTable::from_training(&training, &[0, 1, 2], Measure::InformationGain).unwrap();
        let slices: Vec<NodeSlice> = (0..=2).map(|i| NodeSlice::from_targets(i, &training.get(i, 0).marginal())).collect();
        let choices = best_choice_per_fold(&q, &slices, 1);
        assert_eq!(choices, vec![Choice::Test(0), Choice::Test(0), Choice::Leaf]);
    }

    #[test]
    fn accumulation_counts_evaluations_once() {
        let ds = numeric_ds((0..12).map(|v| v as f64).collect());
        let folds = FoldAssignment::from_folds(3, (0..12).map(|e| (e % 3) as u32 + 1).collect()).unwrap();
        let all: Vec<usize> = (0..12).collect();
        let tests = enumerate_tests(&ds, &all);
        let mut counters = Counters::default();
        accumulate_fold_statistics(&ds, &folds, &all, &tests, &mut counters);
        assert_eq!(counters.evaluations, (tests.len() * 12) as u64);

        // examples drawn from a single part leave the others empty
        let only_third: Vec<usize> = (0..12).filter(|e| e % 3 == 2).collect();
        let parts = accumulate_fold_statistics(&ds, &folds, &only_third, &tests, &mut counters);
        for t in 0..tests.len() {
            assert_eq!(parts.get(1, t).total(), 0);
            assert_eq!(parts.get(2, t).total(), 0);
            assert_eq!(parts.get(3, t).total(), 4);
        }
    }

    fn direct(ds: &Dataset, examples: &[usize], test: &Test) -> StatisticsMatrix {
        let mut s = StatisticsMatrix::for_dataset(ds, test.arity());
        for &e in examples {
            update_statistics(&mut s, test.outcome(ds, e), ds.target_value(e)).unwrap();
        }
        s
    }

    fn random_ds(len: usize, seed: u64, numeric_target: bool) -> Dataset {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let schema = Schema::new(
            vec![Attribute::numeric("x"), Attribute::discrete("d", vec!["a".into(), "b".into(), "c".into()])],
            if numeric_target {
                Target::numeric("y")
            } else {
                Target::class("y", vec!["a".into(), "b".into(), "c".into()])
            },
        )
        .unwrap();
        let target = if numeric_target {
            TargetColumn::Numeric((0..len).map(|_| rng.gen_range(-50.0..50.0)).collect())
        } else {
            TargetColumn::Class((0..len).map(|_| rng.gen_range(0..3)).collect())
        };
        Dataset::new(
            schema,
            vec![
                Column::Numeric((0..len).map(|_| rng.gen_range(0..10) as f64).collect()),
                Column::Discrete((0..len).map(|_| rng.gen_range(0..3)).collect()),
            ],
            target,
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn subtraction_matches_direct_accumulation(len in 4usize..60, n_raw in 2usize..6, seed in any::<u64>(), numeric in any::<bool>()) {
            let n = n_raw.min(len);
            let ds = random_ds(len, seed, numeric);
            let folds = crate::data::assign_folds(&ds, n, seed, false).unwrap();
            let all: Vec<usize> = (0..len).collect();
            let tests = enumerate_tests(&ds, &all);
            let mut counters = Counters::default();
            let parts = accumulate_fold_statistics(&ds, &folds, &all, &tests, &mut counters);
            let training = derive_training_statistics(&parts).unwrap();
            for i in 0..=n {
                let view = crate::data::training_view(&ds, &folds, i).unwrap();
                for (t, test) in tests.iter().enumerate() {
                    let expected = direct(&ds, &view, test);
                    let got = training.get(i, t);
                    match (&expected, got) {
                        (StatisticsMatrix::Numeric { cells: a }, StatisticsMatrix::Numeric { cells: b }) => {
                            for (x, y) in a.iter().zip(b) {
                                prop_assert_eq!(x.count, y.count);
                                prop_assert!((x.sum - y.sum).abs() <= 1e-9 * x.sum.abs().max(1.0));
                                prop_assert!((x.sum_sq - y.sum_sq).abs() <= 1e-9 * x.sum_sq.abs().max(1.0));
                            }
                        }
                        _ => prop_assert_eq!(&expected, got),
                    }
                }
            }
            // additivity: sum of parts equals direct accumulation over the union
            let pooled = parts.pooled().unwrap();
            for (t, test) in tests.iter().enumerate() {
                if !numeric {
                    prop_assert_eq!(&pooled[t], &direct(&ds, &all, test));
                }
            }
        }

        #[test]
        fn gain_bounds(counts in proptest::collection::vec(0u64..20, 6)) {
            let s = class_matrix(2, 3, counts);
            prop_assume!(s.total() > 0);
            let g = compute_quality(&s, Measure::InformationGain).unwrap();
            prop_assert!(g >= 0.0 && g <= 3f64.log2() + 1e-12);
            let r = compute_quality(&s, Measure::GainRatio).unwrap();
            prop_assert!(r.is_finite() && r >= 0.0);
        }

        #[test]
        fn variance_reduction_nonnegative(ys in proptest::collection::vec((0usize..3, -1e3f64..1e3), 1..40)) {
            let mut s = StatisticsMatrix::numeric(3);
            for (o, y) in ys {
                update_statistics(&mut s, o, TargetValue::Numeric(y)).unwrap();
            }
            prop_assert!(compute_quality(&s, Measure::VarianceReduction).unwrap() >= -1e-9);
        }
    }
}
