//! Seeded synthetic datasets.
//!
//! [`generate_synthetic`] covers the regimes that matter for sharing:
//! a stable concept every fold agrees on, pure label noise where folds
//! disagree almost everywhere, and a mix of both. [`random_dataset`] draws
//! small random problems for equivalence checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Attribute, Column, Dataset, Schema, Target, TargetColumn};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Stable,
    Unstable,
    Mixed,
}

/// Probability of a 1 for the relevant attributes. Distinct values keep the
/// gains of competing tests well apart.
const RELEVANT_P: [f64; 3] = [0.5, 0.3, 0.6];

// Non-numeric labels so written CSV loads back as discrete columns.
fn binary_domain() -> Vec<String> {
    vec!["n".into(), "y".into()]
}

/// `n_examples` examples over `a` binary attributes `x0..x{a-1}` and a
/// binary class.
///
/// * stable: `class = x0 or (not x1 and x2)`, restricted to the first
///   `min(a, 3)` attributes; the rest are irrelevant.
/// * unstable: uniformly random labels.
/// * mixed: `x0 = 1` gives class 1, otherwise `x1 = 1` gives class 0,
///   otherwise the label is random.
pub fn generate_synthetic(regime: Regime, n_examples: usize, a: usize, seed: u64) -> Result<Dataset> {
    if a == 0 || n_examples == 0 {
        return Err(Error::Config("synthetic data needs at least one attribute and one example".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let relevant = a.min(3);
    let mut columns = vec![Vec::with_capacity(n_examples); a];
    let mut labels = Vec::with_capacity(n_examples);
    for _ in 0..n_examples {
        for (j, col) in columns.iter_mut().enumerate() {
            let p = if j < relevant { RELEVANT_P[j] } else { 0.5 };
            col.push(u32::from(rng.gen_bool(p)));
        }
        let x = |j: usize| columns.get(j).map(|c: &Vec<u32>| *c.last().unwrap() == 1);
        let label = match regime {
            Regime::Stable => match relevant {
                1 => x(0).unwrap(),
                2 => x(0).unwrap() || !x(1).unwrap(),
                _ => x(0).unwrap() || (!x(1).unwrap() && x(2).unwrap()),
            },
            Regime::Unstable => rng.gen_bool(0.5),
            Regime::Mixed => {
                if x(0).unwrap() {
                    true
                } else if x(1) == Some(true) {
                    false
                } else {
                    rng.gen_bool(0.5)
                }
            }
        };
        labels.push(u32::from(label));
    }
    let attributes = (0..a).map(|j| Attribute::discrete(format!("x{j}"), binary_domain())).collect();
    Dataset::new(
        Schema::new(attributes, Target::class("class", vec!["neg".into(), "pos".into()]))?,
        columns.into_iter().map(Column::Discrete).collect(),
        TargetColumn::Class(labels),
    )
}

/// Kind of problem drawn by [`random_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    /// Discrete attributes, class target.
    Discrete,
    /// Numeric and discrete attributes, class target.
    Numeric,
    /// Discrete attributes, numeric target.
    Regression,
}

/// A small random problem: 20 to 200 examples, 1 to 8 attributes, a noisy
/// concept over the first attributes.
pub fn random_dataset(kind: SuiteKind, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(20..=200);
    let attrs = rng.gen_range(1..=8);
    let classes = rng.gen_range(2..=3u32);
    let noise = rng.gen_range(0.0..0.4);
    let mut attributes = Vec::with_capacity(attrs);
    let mut columns = Vec::with_capacity(attrs);
    let mut codes: Vec<Vec<u32>> = Vec::with_capacity(attrs);
    for j in 0..attrs {
        let numeric = kind == SuiteKind::Numeric && rng.gen_bool(0.5);
        if numeric {
            // a coarse grid so values repeat and thresholds are shared
            let values: Vec<f64> = (0..len).map(|_| f64::from(rng.gen_range(0..12u32)) / 2.0).collect();
            codes.push(values.iter().map(|&v| u32::from(v >= 3.0)).collect());
            attributes.push(Attribute::numeric(format!("n{j}")));
            columns.push(Column::Numeric(values));
        } else {
            let domain = rng.gen_range(2..=4u32);
            let col: Vec<u32> = (0..len).map(|_| rng.gen_range(0..domain)).collect();
            codes.push(col.clone());
            attributes.push(Attribute::discrete(
                format!("d{j}"),
                (0..domain).map(|v| format!("v{v}")).collect(),
            ));
            columns.push(Column::Discrete(col));
        }
    }
    let signal = |e: usize| codes[0][e] + codes.get(1).map_or(0, |c| c[e] % 2);
    let target = match kind {
        SuiteKind::Regression => TargetColumn::Numeric(
            (0..len)
                .map(|e| f64::from(signal(e)) * 1.5 + rng.gen_range(-noise..=noise) * 4.0)
                .collect(),
        ),
        _ => TargetColumn::Class(
            (0..len)
                .map(|e| {
                    if rng.gen_bool(noise) {
                        rng.gen_range(0..classes)
                    } else {
                        signal(e) % classes
                    }
                })
                .collect(),
        ),
    };
    let target_schema = match kind {
        SuiteKind::Regression => Target::numeric("y"),
        _ => Target::class("y", (0..classes).map(|c| format!("c{c}")).collect()),
    };
    Dataset::new(
        Schema::new(attributes, target_schema).expect("generated names are unique"),
        columns,
        target,
    )
    .expect("generated columns have equal length")
}
