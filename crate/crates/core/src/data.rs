//! Tabular datasets, schema inference and cross-validation fold assignment.
//!
//! A [`Dataset`] is stored column-wise: discrete attributes hold indices into
//! their value domain, numeric attributes hold `f64`s. The target column is
//! either a class index or a numeric value. Fold assignment partitions the
//! example indices into `n` disjoint parts `D_1..D_n`; the training view of
//! fold `i` is everything outside `D_i`, and fold `0` trains on everything.

use std::collections::{BTreeSet, HashSet};
use std::io::Read;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeKind {
    Discrete { domain: Vec<String> },
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn discrete<S: Into<String>>(name: S, domain: Vec<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Discrete { domain },
        }
    }

    pub fn numeric<S: Into<String>>(name: S) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Class,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    /// Class labels in schema order. Empty for numeric targets.
    pub classes: Vec<String>,
    pub kind: TargetKind,
}

impl Target {
    pub fn class<S: Into<String>>(name: S, classes: Vec<String>) -> Self {
        Target {
            name: name.into(),
            classes,
            kind: TargetKind::Class,
        }
    }

    pub fn numeric<S: Into<String>>(name: S) -> Self {
        Target {
            name: name.into(),
            classes: Vec::new(),
            kind: TargetKind::Numeric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<Attribute>,
    pub target: Target,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>, target: Target) -> Result<Self> {
        let mut seen = HashSet::new();
        for attr in &attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", attr.name)));
            }
            if let AttributeKind::Discrete { domain } = &attr.kind {
                if domain.is_empty() {
                    return Err(Error::Schema(format!(
                        "discrete attribute `{}` has an empty domain",
                        attr.name
                    )));
                }
            }
        }
        if seen.contains(target.name.as_str()) {
            return Err(Error::Schema(format!(
                "target `{}` is also listed as an attribute",
                target.name
            )));
        }
        if target.kind == TargetKind::Class && target.classes.is_empty() {
            return Err(Error::Schema("class target has no classes".into()));
        }
        Ok(Schema { attributes, target })
    }

    pub fn num_classes(&self) -> usize {
        self.target.classes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Discrete(Vec<u32>),
    Numeric(Vec<f64>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Discrete(v) => v.len(),
            Column::Numeric(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetColumn {
    Class(Vec<u32>),
    Numeric(Vec<f64>),
}

impl TargetColumn {
    fn len(&self) -> usize {
        match self {
            TargetColumn::Class(v) => v.len(),
            TargetColumn::Numeric(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttrValue {
    Discrete(u32),
    Numeric(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetValue {
    Class(u32),
    Numeric(f64),
}

/// Examples with a value for every attribute and the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<Column>,
    target: TargetColumn,
}

impl Dataset {
    pub fn new(schema: Schema, columns: Vec<Column>, target: TargetColumn) -> Result<Self> {
        let len = target.len();
        if len == 0 {
            return Err(Error::EmptyInput("dataset has no examples".into()));
        }
        if columns.len() != schema.attributes.len() {
            return Err(Error::Schema(format!(
                "{} columns for {} attributes",
                columns.len(),
                schema.attributes.len()
            )));
        }
        for (attr, col) in schema.attributes.iter().zip(&columns) {
            if col.len() != len {
                return Err(Error::Schema(format!(
                    "column `{}` has {} values, target has {len}",
                    attr.name,
                    col.len()
                )));
            }
            match (&attr.kind, col) {
                (AttributeKind::Discrete { domain }, Column::Discrete(codes)) => {
                    if codes.iter().any(|&c| c as usize >= domain.len()) {
                        return Err(Error::Schema(format!(
                            "column `{}` holds a code outside its domain",
                            attr.name
                        )));
                    }
                }
                (AttributeKind::Numeric, Column::Numeric(values)) => {
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Schema(format!(
                            "column `{}` holds a non-finite value",
                            attr.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column `{}` does not match its declared kind",
                        attr.name
                    )))
                }
            }
        }
        match (&schema.target.kind, &target) {
            (TargetKind::Class, TargetColumn::Class(codes)) => {
                let k = schema.target.classes.len();
                if codes.iter().any(|&c| c as usize >= k) {
                    return Err(Error::Schema("class code outside the class list".into()));
                }
            }
            (TargetKind::Numeric, TargetColumn::Numeric(values)) => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Schema("target holds a non-finite value".into()));
                }
            }
            _ => return Err(Error::Schema("target column does not match its kind".into())),
        }
        Ok(Dataset {
            schema,
            columns,
            target,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, attribute: usize) -> &Column {
        &self.columns[attribute]
    }

    pub fn target_column(&self) -> &TargetColumn {
        &self.target
    }

    pub fn target_kind(&self) -> TargetKind {
        self.schema.target.kind
    }

    pub fn target_value(&self, example: usize) -> TargetValue {
        match &self.target {
            TargetColumn::Class(c) => TargetValue::Class(c[example]),
            TargetColumn::Numeric(v) => TargetValue::Numeric(v[example]),
        }
    }

    pub fn value(&self, example: usize, attribute: usize) -> AttrValue {
        match &self.columns[attribute] {
            Column::Discrete(c) => AttrValue::Discrete(c[example]),
            Column::Numeric(v) => AttrValue::Numeric(v[example]),
        }
    }

    /// Attribute values of one example, in schema order.
    pub fn example(&self, example: usize) -> Vec<AttrValue> {
        (0..self.columns.len())
            .map(|a| self.value(example, a))
            .collect()
    }

    /// Restricts the dataset to the given example indices, in that order.
    pub fn select(&self, examples: &[usize]) -> Result<Dataset> {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Discrete(v) => Column::Discrete(examples.iter().map(|&e| v[e]).collect()),
                Column::Numeric(v) => Column::Numeric(examples.iter().map(|&e| v[e]).collect()),
            })
            .collect();
        let target = match &self.target {
            TargetColumn::Class(v) => TargetColumn::Class(examples.iter().map(|&e| v[e]).collect()),
            TargetColumn::Numeric(v) => {
                TargetColumn::Numeric(examples.iter().map(|&e| v[e]).collect())
            }
        };
        Dataset::new(self.schema.clone(), columns, target)
    }

    /// Writes the dataset as delimiter-separated text with a header row.
    pub fn write_csv<W: std::io::Write>(&self, writer: W, delimiter: u8) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(writer);
        let mut header: Vec<&str> = self
            .schema
            .attributes
            .iter()
            .map(|a| a.name.as_str())
            .collect();
        header.push(&self.schema.target.name);
        out.write_record(&header)?;
        for e in 0..self.len() {
            let mut record: Vec<String> = Vec::with_capacity(header.len());
            for (a, attr) in self.schema.attributes.iter().enumerate() {
                record.push(match (&attr.kind, self.value(e, a)) {
                    (AttributeKind::Discrete { domain }, AttrValue::Discrete(c)) => {
                        domain[c as usize].clone()
                    }
                    (_, AttrValue::Numeric(v)) => v.to_string(),
                    _ => unreachable!("column kinds are validated on construction"),
                });
            }
            record.push(match self.target_value(e) {
                TargetValue::Class(c) => self.schema.target.classes[c as usize].clone(),
                TargetValue::Numeric(v) => v.to_string(),
            });
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Column-role declarations for [`load_dataset`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub target: String,
    pub delimiter: u8,
    /// Columns forced to be discrete even if every value parses as a number.
    pub discrete: Vec<String>,
    /// Columns forced to be numeric; unparseable values are rejected.
    pub numeric: Vec<String>,
    /// Forces the target kind; inferred like any other column when `None`.
    pub target_kind: Option<TargetKind>,
}

impl LoadOptions {
    pub fn new<S: Into<String>>(target: S) -> Self {
        LoadOptions {
            target: target.into(),
            delimiter: b',',
            discrete: Vec::new(),
            numeric: Vec::new(),
            target_kind: None,
        }
    }

    pub fn delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }

    pub fn discrete<S: Into<String>>(mut self, column: S) -> Self {
        self.discrete.push(column.into());
        self
    }

    pub fn numeric<S: Into<String>>(mut self, column: S) -> Self {
        self.numeric.push(column.into());
        self
    }

    pub fn target_kind(mut self, kind: TargetKind) -> Self {
        self.target_kind = Some(kind);
        self
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Forced {
    Discrete,
    Numeric,
    Inferred,
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads delimiter-separated text with a header row into a [`Dataset`].
///
/// Each column is numeric if all of its values parse as finite numbers and
/// discrete otherwise, unless overridden in `options`. Discrete domains are
/// the observed values in lexicographic order. Row numbers in errors are
/// 1-based data rows (the header is not counted).
pub fn load_dataset<R: Read>(source: R, options: &LoadOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyInput("no header row".into()));
    }
    let target_col = header
        .iter()
        .position(|h| *h == options.target)
        .ok_or_else(|| Error::Schema(format!("target column `{}` not found", options.target)))?;
    for name in options.discrete.iter().chain(&options.numeric) {
        if !header.contains(name) {
            return Err(Error::Schema(format!("unknown column `{name}` in options")));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (c, field) in record.iter().enumerate() {
            let field = field.trim();
            if field.is_empty() {
                return Err(Error::MissingValue {
                    row,
                    column: header[c].clone(),
                });
            }
            cells[c].push(field.to_string());
        }
    }
    if cells[0].is_empty() {
        return Err(Error::EmptyInput("no data rows".into()));
    }

    let forced = |name: &str| {
        if options.discrete.iter().any(|c| c == name) {
            Forced::Discrete
        } else if options.numeric.iter().any(|c| c == name) {
            Forced::Numeric
        } else {
            Forced::Inferred
        }
    };

    let mut attributes = Vec::new();
    let mut columns = Vec::new();
    let mut target = None;
    for (c, values) in cells.into_iter().enumerate() {
        let name = &header[c];
        let mut mode = forced(name);
        if c == target_col {
            match options.target_kind {
                Some(TargetKind::Class) => mode = Forced::Discrete,
                Some(TargetKind::Numeric) => mode = Forced::Numeric,
                None => {}
            }
        }
        let numeric = match mode {
            Forced::Discrete => false,
            Forced::Numeric => true,
            Forced::Inferred => values.iter().all(|v| parse_number(v).is_some()),
        };
        if numeric {
            let parsed = values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    parse_number(v).ok_or_else(|| Error::NotNumeric {
                        row: i + 1,
                        column: name.clone(),
                        value: v.clone(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if c == target_col {
                target = Some((Target::numeric(name.clone()), TargetColumn::Numeric(parsed)));
            } else {
                attributes.push(Attribute::numeric(name.clone()));
                columns.push(Column::Numeric(parsed));
            }
        } else {
            let domain: Vec<String> = values
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let codes: Vec<u32> = values
                .iter()
                .map(|v| domain.binary_search(v).expect("value is in its own domain") as u32)
                .collect();
            if c == target_col {
                target = Some((Target::class(name.clone(), domain), TargetColumn::Class(codes)));
            } else {
                attributes.push(Attribute::discrete(name.clone(), domain));
                columns.push(Column::Discrete(codes));
            }
        }
    }
    let (target, target_column) = target.expect("target column was located in the header");
    Dataset::new(Schema::new(attributes, target)?, columns, target_column)
}

/// Partition of the examples into folds `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    n: usize,
    fold_of: Vec<u32>,
    seed: u64,
    stratified: bool,
}

impl FoldAssignment {
    /// Builds an assignment from explicit fold indices (each in `1..=n`).
    pub fn from_folds(n: usize, fold_of: Vec<u32>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Folds(format!("need at least 2 folds, got {n}")));
        }
        if let Some(&bad) = fold_of.iter().find(|&&f| f == 0 || f as usize > n) {
            return Err(Error::Folds(format!("fold index {bad} outside 1..={n}")));
        }
        Ok(FoldAssignment {
            n,
            fold_of,
            seed: 0,
            stratified: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stratified(&self) -> bool {
        self.stratified
    }

    pub fn len(&self) -> usize {
        self.fold_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of.is_empty()
    }

    /// Fold part (in `1..=n`) that holds `example` out.
    #[inline]
    pub fn fold_of(&self, example: usize) -> usize {
        self.fold_of[example] as usize
    }

    pub fn folds(&self) -> &[u32] {
        &self.fold_of
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n];
        for &f in &self.fold_of {
            sizes[f as usize - 1] += 1;
        }
        sizes
    }

    /// Examples of the held-out part `D_i`, `i` in `1..=n`.
    pub fn part(&self, i: usize) -> Result<Vec<usize>> {
        if i == 0 || i > self.n {
            return Err(Error::FoldIndex {
                index: i,
                n: self.n,
            });
        }
        Ok(self
            .fold_of
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize == i)
            .map(|(e, _)| e)
            .collect())
    }

    /// Stable identity of the assignment, used to reject mismatched forests.
    pub fn digest(&self) -> u64 {
        // FNV-1a over n and the fold map
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        feed(self.n as u64);
        for &f in &self.fold_of {
            feed(u64::from(f));
        }
        h
    }
}

/// Seeded shuffle followed by round-robin dealing into `n` folds.
///
/// When `stratified`, each class is shuffled and dealt separately, with the
/// dealing position carried over from one class to the next so the overall
/// fold sizes stay within one of each other.
pub fn assign_folds(
    dataset: &Dataset,
    n: usize,
    seed: u64,
    stratified: bool,
) -> Result<FoldAssignment> {
    let len = dataset.len();
    if n < 2 {
        return Err(Error::Folds(format!("need at least 2 folds, got {n}")));
    }
    if n > len {
        return Err(Error::Folds(format!(
            "{n} folds requested for only {len} examples"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strata: Vec<Vec<usize>> = if stratified {
        let TargetColumn::Class(classes) = dataset.target_column() else {
            return Err(Error::Folds(
                "stratified folds require a class target".into(),
            ));
        };
        let mut strata = vec![Vec::new(); dataset.schema().num_classes()];
        for (e, &c) in classes.iter().enumerate() {
            strata[c as usize].push(e);
        }
        strata
    } else {
        vec![(0..len).collect()]
    };

    let mut fold_of = vec![0u32; len];
    let mut next = 0usize;
    for mut stratum in strata {
        stratum.shuffle(&mut rng);
        for e in stratum {
            fold_of[e] = (next % n) as u32 + 1;
            next += 1;
        }
    }
    Ok(FoldAssignment {
        n,
        fold_of,
        seed,
        stratified,
    })
}

/// Example indices of the training set `T_i`, in dataset order.
///
/// `T_0` is the whole dataset; for `i > 0` it is everything outside `D_i`.
pub fn training_view(dataset: &Dataset, folds: &FoldAssignment, i: usize) -> Result<Vec<usize>> {
    if i > folds.n() {
        return Err(Error::FoldIndex {
            index: i,
            n: folds.n(),
        });
    }
    if folds.len() != dataset.len() {
        return Err(Error::Folds(format!(
            "assignment covers {} examples, dataset has {}",
            folds.len(),
            dataset.len()
        )));
    }
    Ok((0..dataset.len())
        .filter(|&e| i == 0 || folds.fold_of(e) != i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small(n: usize) -> Dataset {
        let schema = Schema::new(
            vec![Attribute::numeric("A")],
            Target::class("C", vec!["neg".into(), "pos".into()]),
        )
        .unwrap();
        Dataset::new(
            schema,
            vec![Column::Numeric((0..n).map(|v| v as f64).collect())],
            TargetColumn::Class((0..n).map(|v| (v % 2) as u32).collect()),
        )
        .unwrap()
    }

    #[test]
    fn loads_three_rows() {
        let text = "A,C\n1.5,yes\n2,no\n3,yes\n";
        let ds = load_dataset(text.as_bytes(), &LoadOptions::new("C")).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.schema().attributes.len(), 1);
        assert_eq!(ds.schema().attributes[0].kind, AttributeKind::Numeric);
        assert_eq!(ds.target_kind(), TargetKind::Class);
        assert_eq!(ds.schema().target.classes, vec!["no", "yes"]);
        assert_eq!(ds.target_value(0), TargetValue::Class(1));
    }

    #[test]
    fn empty_cell_names_row_and_column() {
        let text = "A,B,C\n1,x,yes\n2,,no\n";
        let err = load_dataset(text.as_bytes(), &LoadOptions::new("C")).unwrap_err();
        match err {
            Error::MissingValue { row, column } => {
                assert_eq!(row, 2);
                assert_eq!(column, "B");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn forced_discrete_keeps_domain() {
        let text = "A,C\n1,p\n2,q\nx,p\n";
        let ds = load_dataset(text.as_bytes(), &LoadOptions::new("C").discrete("A")).unwrap();
        assert_eq!(
            ds.schema().attributes[0].kind,
            AttributeKind::Discrete {
                domain: vec!["1".into(), "2".into(), "x".into()]
            }
        );
        // inferred the same way without the override, since `x` is not numeric
        let inferred = load_dataset(text.as_bytes(), &LoadOptions::new("C")).unwrap();
        assert_eq!(inferred.schema(), ds.schema());
    }

    #[test]
    fn forced_numeric_rejects_text() {
        let text = "A,C\n1,p\nx,q\n";
        let err = load_dataset(text.as_bytes(), &LoadOptions::new("C").numeric("A")).unwrap_err();
        assert!(matches!(err, Error::NotNumeric { row: 2, .. }), "{err}");
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(load_dataset("".as_bytes(), &LoadOptions::new("C")).is_err());
        assert!(matches!(
            load_dataset("A,C\n".as_bytes(), &LoadOptions::new("C")),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn tab_delimited_and_numeric_target() {
        let text = "x\ty\n1\t0.5\n2\t1.5\n";
        let ds = load_dataset(text.as_bytes(), &LoadOptions::new("y").delimiter(b'\t')).unwrap();
        assert_eq!(ds.target_kind(), TargetKind::Numeric);
        let forced = load_dataset(
            text.as_bytes(),
            &LoadOptions::new("y")
                .delimiter(b'\t')
                .target_kind(TargetKind::Class),
        )
        .unwrap();
        assert_eq!(forced.schema().num_classes(), 2);
    }

    #[test]
    fn schema_rejects_duplicates_and_empty_domains() {
        let t = Target::class("C", vec!["a".into()]);
        assert!(Schema::new(vec![Attribute::numeric("A"), Attribute::numeric("A")], t.clone()).is_err());
        assert!(Schema::new(vec![Attribute::discrete("A", vec![])], t.clone()).is_err());
        assert!(Schema::new(vec![Attribute::numeric("C")], t).is_err());
    }

    #[test]
    fn twelve_examples_three_folds() {
        let ds = small(12);
        let folds = assign_folds(&ds, 3, 7, false).unwrap();
        assert_eq!(folds.part_sizes(), vec![4, 4, 4]);
        for i in 1..=3 {
            assert_eq!(training_view(&ds, &folds, i).unwrap().len(), 8);
        }
        assert_eq!(training_view(&ds, &folds, 0).unwrap(), (0..12).collect::<Vec<_>>());
        let t2 = training_view(&ds, &folds, 2).unwrap();
        assert!(t2.iter().all(|&e| folds.fold_of(e) != 2));
        assert!(t2.windows(2).all(|w| w[0] < w[1]));
        assert!(training_view(&ds, &folds, 4).is_err());
    }

    #[test]
    fn leave_one_out_shape() {
        let ds = small(10);
        let folds = assign_folds(&ds, 10, 1, false).unwrap();
        assert_eq!(folds.part_sizes(), vec![1; 10]);
    }

    #[test]
    fn fold_count_bounds() {
        let ds = small(5);
        assert!(assign_folds(&ds, 1, 0, false).is_err());
        assert!(assign_folds(&ds, 6, 0, false).is_err());
        assert!(assign_folds(&ds, 5, 0, false).is_ok());
    }

    #[test]
    fn stratified_requires_classes() {
        let schema = Schema::new(vec![], Target::numeric("y")).unwrap();
        let ds = Dataset::new(schema, vec![], TargetColumn::Numeric(vec![1.0, 2.0, 3.0])).unwrap();
        assert!(assign_folds(&ds, 2, 0, true).is_err());
    }

    proptest! {
        #[test]
        fn fold_invariants(len in 2usize..200, n_raw in 2usize..12, seed in any::<u64>(), stratified in any::<bool>()) {
            let n = n_raw.min(len);
            let ds = small(len);
            let folds = assign_folds(&ds, n, seed, stratified).unwrap();
            let sizes = folds.part_sizes();
            prop_assert!(sizes.iter().all(|&s| s > 0));
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            if stratified {
                for class in 0..2u32 {
                    let mut per = vec![0usize; n];
                    for e in 0..len {
                        if e as u32 % 2 == class {
                            per[folds.fold_of(e) - 1] += 1;
                        }
                    }
                    prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
                }
            }
            // every example sits in exactly one part and n-1 training sets
            let mut in_training = vec![0usize; len];
            for i in 1..=n {
                for e in training_view(&ds, &folds, i).unwrap() {
                    in_training[e] += 1;
                }
            }
            prop_assert!(in_training.iter().all(|&c| c == n - 1));
            let mut covered = vec![0usize; len];
            for i in 1..=n {
                for e in folds.part(i).unwrap() {
                    covered[e] += 1;
                }
            }
            prop_assert!(covered.iter().all(|&c| c == 1));
            prop_assert_eq!(assign_folds(&ds, n, seed, stratified).unwrap(), folds);
        }
    }
}
