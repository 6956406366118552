//! Prediction and cross-validation estimates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{AttrValue, AttributeKind, Dataset, FoldAssignment, Schema, TargetKind, TargetValue};
use crate::error::{Error, Result};
use crate::forest::{extract_fold_tree, Forest};
use crate::tree::{Tree, TreeNode};

/// Prediction for a free-standing example given as one value per attribute.
pub fn predict(tree: &Tree, schema: &Schema, example: &[AttrValue]) -> Result<TargetValue> {
    if example.len() != schema.attributes.len() {
        return Err(Error::SchemaMismatch(format!(
            "expected {} attribute values, got {}",
            schema.attributes.len(),
            example.len()
        )));
    }
    for (attr, value) in schema.attributes.iter().zip(example) {
        let ok = match (&attr.kind, value) {
            (AttributeKind::Discrete { domain }, AttrValue::Discrete(code)) => (*code as usize) < domain.len(),
            (AttributeKind::Numeric, AttrValue::Numeric(v)) => !v.is_nan(),
            _ => false,
        };
        if !ok {
            return Err(Error::SchemaMismatch(format!(
                "value {value:?} does not fit attribute `{}`",
                attr.name
            )));
        }
    }
    let mut id = tree.root();
    loop {
        match tree.node(id) {
            TreeNode::Leaf(leaf) => return Ok(leaf.prediction()),
            TreeNode::Split { test, children } => {
                let outcome = test.outcome_of(example[test.attribute]).ok_or_else(|| {
                    Error::SchemaMismatch(format!("tree tests attribute {} with a different kind", test.attribute))
                })?;
                id = *children.get(outcome).ok_or(Error::OutcomeOutOfRange {
                    outcome,
                    arity: children.len(),
                })?;
            }
        }
    }
}

/// Result of fold `i`'s tree on its held-out part `D_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldEvaluation {
    pub fold: usize,
    /// `|D_i|`, the number of predictions made.
    pub size: usize,
    /// Correct predictions (classification only).
    pub correct: Option<u64>,
    /// Summed squared error (regression only).
    pub squared_error: Option<f64>,
    /// Accuracy or mean squared error; `None` for an empty part.
    pub metric: Option<f64>,
    /// `confusion[actual][predicted]` (classification only).
    pub confusion: Option<Vec<Vec<u64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub task: TargetKind,
    /// `"accuracy"` or `"mse"`.
    pub metric: String,
    pub folds: Vec<FoldEvaluation>,
    pub examples: usize,
    /// Example-weighted mean of the per-fold metric.
    pub aggregate: f64,
}

impl EvaluationReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// One row per fold plus an `all` row.
    pub fn write_csv<W: Write>(&self, writer: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
        w.write_record(["fold", "size", "correct", "squared_error", &self.metric])?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for f in &self.folds {
            w.write_record([
                f.fold.to_string(),
                f.size.to_string(),
                opt(f.correct.map(|c| c.to_string())),
                opt(f.squared_error.map(|s| s.to_string())),
                opt(f.metric.map(|m| m.to_string())),
            ])?;
        }
        let correct: Option<u64> = self.folds.iter().map(|f| f.correct).sum();
        let squared: Option<f64> = self.folds.iter().map(|f| f.squared_error).sum();
        w.write_record([
            "all".to_string(),
            self.examples.to_string(),
            opt(correct.map(|c| c.to_string())),
            opt(squared.map(|s| s.to_string())),
            self.aggregate.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

fn evaluate_fold(tree: &Tree, dataset: &Dataset, part: &[usize], fold: usize) -> FoldEvaluation {
    let size = part.len();
    match dataset.target_kind() {
        TargetKind::Class => {
            let k = dataset.schema().num_classes();
            let mut confusion = vec![vec![0u64; k]; k];
            let mut correct = 0u64;
            for &e in part {
                let (TargetValue::Class(actual), TargetValue::Class(predicted)) =
                    (dataset.target_value(e), tree.predict_example(dataset, e))
                else {
                    unreachable!("class trees predict classes")
                };
                confusion[actual as usize][predicted as usize] += 1;
                correct += u64::from(actual == predicted);
            }
            FoldEvaluation {
                fold,
                size,
                correct: Some(correct),
                squared_error: None,
                metric: (size > 0).then(|| correct as f64 / size as f64),
                confusion: Some(confusion),
            }
        }
        TargetKind::Numeric => {
            let mut squared = 0.0;
            for &e in part {
                let (TargetValue::Numeric(actual), TargetValue::Numeric(predicted)) =
                    (dataset.target_value(e), tree.predict_example(dataset, e))
                else {
                    unreachable!("regression trees predict numbers")
                };
                squared += (predicted - actual) * (predicted - actual);
            }
            FoldEvaluation {
                fold,
                size,
                correct: None,
                squared_error: Some(squared),
                metric: (size > 0).then(|| squared / size as f64),
                confusion: None,
            }
        }
    }
}

/// Evaluates `trees[i - 1]` on `D_i` for every fold `i`.
pub fn estimate_from_trees(trees: &[Tree], dataset: &Dataset, folds: &FoldAssignment) -> Result<EvaluationReport> {
    if trees.len() != folds.n() {
        return Err(Error::Folds(format!("{} trees for {} folds", trees.len(), folds.n())));
    }
    if folds.len() != dataset.len() {
        return Err(Error::Folds(format!(
            "assignment covers {} examples, dataset has {}",
            folds.len(),
            dataset.len()
        )));
    }
    let mut evaluations = Vec::with_capacity(trees.len());
    for (k, tree) in trees.iter().enumerate() {
        let part = folds.part(k + 1)?;
        evaluations.push(evaluate_fold(tree, dataset, &part, k + 1));
    }
    let examples: usize = evaluations.iter().map(|f| f.size).sum();
    let task = dataset.target_kind();
    let total = match task {
        TargetKind::Class => evaluations.iter().filter_map(|f| f.correct).sum::<u64>() as f64,
        TargetKind::Numeric => evaluations.iter().filter_map(|f| f.squared_error).sum(),
    };
    Ok(EvaluationReport {
        n: folds.n(),
        task,
        metric: match task {
            TargetKind::Class => "accuracy".into(),
            TargetKind::Numeric => "mse".into(),
        },
        folds: evaluations,
        examples,
        aggregate: total / examples as f64,
    })
}

/// Cross-validation estimate from a forest's fold trees.
///
/// The forest must have been built with exactly this fold assignment.
pub fn cross_validation_estimate(forest: &Forest, dataset: &Dataset, folds: &FoldAssignment) -> Result<EvaluationReport> {
    if forest.n() != folds.n() || forest.folds_digest() != folds.digest() {
        return Err(Error::Folds(
            "forest was built with a different fold assignment".into(),
        ));
    }
    let trees = (1..=folds.n())
        .map(|i| extract_fold_tree(forest, i))
        .collect::<Result<Vec<_>>>()?;
    estimate_from_trees(&trees, dataset, folds)
}
