//! Timing harness, cost model and derived speedup metrics.
//!
//! `T_a` is the time to build the actual tree alone, `T_s` the time of the
//! serial procedure (actual tree plus every fold tree) and `T_p` the time of
//! the forest build. From these: `S = T_s / T_p`,
//! `O_s = 100 (T_s / T_a - 1)` and `O_p = 100 (T_p / T_a - 1)`.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::{training_view, Dataset, FoldAssignment};
use crate::error::{Error, Result};
use crate::forest::{forest_metrics, Forest, ForestMetrics};
use crate::induction::{grow_forest, grow_tree_serial, run_serial_cross_validation, InductionConfig, SerialRun};
use crate::instrument::Counters;
use crate::splits::enumerate_tests;

/// Medians shorter than this are treated as timer noise.
pub const MIN_MEASURABLE: Duration = Duration::from_millis(2);
const MAX_REPEATS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Serial,
    Parallel,
    Both,
}

impl Mode {
    fn serial(self) -> bool {
        self != Mode::Parallel
    }

    fn parallel(self) -> bool {
        self != Mode::Serial
    }
}

pub fn speedup(t_s: f64, t_p: f64) -> f64 {
    t_s / t_p
}

/// Percentage overhead of `t` relative to the actual tree's time `t_a`.
pub fn overhead_percent(t: f64, t_a: f64) -> f64 {
    100.0 * (t / t_a - 1.0)
}

/// Per-operation costs: `t_e` per example-test statistics update, `t_p`
/// per example partitioned, `a` candidate tests at the root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub t_e: f64,
    pub t_p: f64,
    pub a: usize,
    pub n: usize,
}

impl CostModel {
    /// Phase time divided by operation count, pooled over `runs`.
    pub fn from_counters(runs: &[&Counters], a: usize, n: usize) -> Result<CostModel> {
        let evaluations: u64 = runs.iter().map(|c| c.evaluations).sum();
        let partitions: u64 = runs.iter().map(|c| c.partitions).sum();
        let acc: Duration = runs.iter().map(|c| c.accumulate_time).sum();
        let part: Duration = runs.iter().map(|c| c.partition_time).sum();
        if evaluations == 0 || partitions == 0 || acc.is_zero() || part.is_zero() {
            return Err(Error::Config(
                "cost model needs at least one timed evaluation and partition".into(),
            ));
        }
        Ok(CostModel {
            t_e: acc.as_secs_f64() / evaluations as f64,
            t_p: part.as_secs_f64() / partitions as f64,
            a,
            n,
        })
    }

    pub fn bound(&self) -> Result<SpeedupBound> {
        speedup_bound(self.n, self.a as f64, self.t_e, self.t_p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupBound {
    /// `min(n, 1 + a t_e / t_p)`, reached when every fold picks a
    /// different test.
    pub worst: f64,
    /// `n`, reached when all folds agree everywhere.
    pub best: f64,
}

pub fn speedup_bound(n: usize, a: f64, t_e: f64, t_p: f64) -> Result<SpeedupBound> {
    if n < 2 {
        return Err(Error::Config(format!("speedup bound needs n >= 2, got {n}")));
    }
    for (name, v) in [("a", a), ("t_e", t_e), ("t_p", t_p)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
        }
    }
    Ok(SpeedupBound {
        worst: (n as f64).min(1.0 + a * t_e / t_p),
        best: n as f64,
    })
}

/// Refinement time per level for both procedures, plus f of the forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelProfileRow {
    pub level: usize,
    pub t_r_parallel: f64,
    pub t_r_serial: f64,
    pub f: Option<f64>,
}

pub fn per_level_profile(forest: &Forest, serial: &SerialRun) -> Vec<LevelProfileRow> {
    let metrics = forest_metrics(forest);
    let levels = forest.profile.levels.len().max(serial.profile.levels.len());
    (0..levels)
        .map(|level| LevelProfileRow {
            level,
            t_r_parallel: forest.profile.levels.get(level).map_or(0.0, |w| w.refine_time.as_secs_f64()),
            t_r_serial: serial.profile.levels.get(level).map_or(0.0, |w| w.refine_time.as_secs_f64()),
            f: metrics.levels.get(level).and_then(|l| l.f),
        })
        .collect()
}

pub fn write_level_profile<W: Write>(rows: &[LevelProfileRow], writer: W, delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
    w.write_record(["level", "t_r_parallel", "t_r_serial", "f"])?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.t_r_parallel.to_string(),
            r.t_r_serial.to_string(),
            r.f.map(|f| f.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub n: usize,
    /// Number of examples N.
    pub examples: usize,
    /// Candidate tests at the root.
    pub a: usize,
    pub repeats: usize,
    /// Seconds, medians over `repeats`.
    pub t_a: f64,
    pub t_s: Option<f64>,
    pub t_p: Option<f64>,
    pub speedup: Option<f64>,
    pub overhead_serial: Option<f64>,
    pub overhead_parallel: Option<f64>,
    pub serial_counters: Option<Counters>,
    pub parallel_counters: Option<Counters>,
    /// Serial evaluations divided by parallel evaluations.
    pub counter_speedup: Option<f64>,
    /// Wall-clock speedup divided by the counter-based one.
    pub wall_to_counter: Option<f64>,
    pub cost_model: Option<CostModel>,
    pub bound: Option<SpeedupBound>,
    /// Node count of the actual tree.
    pub actual_tree_nodes: usize,
    pub forest: Option<ForestMetrics>,
    pub levels: Vec<LevelProfileRow>,
    pub warnings: Vec<String>,
}

impl TimingReport {
    /// Recomputes `S`, `O_s` and `O_p` from the stored times.
    pub fn recompute_derived(&self) -> (Option<f64>, Option<f64>, Option<f64>) {
        (
            self.t_s.zip(self.t_p).map(|(s, p)| speedup(s, p)),
            self.t_s.map(|s| overhead_percent(s, self.t_a)),
            self.t_p.map(|p| overhead_percent(p, self.t_a)),
        )
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Headline numbers as `key,value` rows.
    pub fn write_csv<W: Write>(&self, writer: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
        w.write_record(["metric", "value"])?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let rows = [
            ("n", Some(self.n as f64)),
            ("N", Some(self.examples as f64)),
            ("a", Some(self.a as f64)),
            ("repeats", Some(self.repeats as f64)),
            ("T_a", Some(self.t_a)),
            ("T_s", self.t_s),
            ("T_p", self.t_p),
            ("S", self.speedup),
            ("O_s", self.overhead_serial),
            ("O_p", self.overhead_parallel),
            ("counter_speedup", self.counter_speedup),
            ("bound_worst", self.bound.map(|b| b.worst)),
            ("bound_best", self.bound.map(|b| b.best)),
            ("t_e", self.cost_model.map(|c| c.t_e)),
            ("t_p", self.cost_model.map(|c| c.t_p)),
        ];
        for (k, v) in rows {
            w.write_record([k.to_string(), fmt(v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn median(mut samples: Vec<Duration>) -> f64 {
    samples.sort();
    let m = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[m].as_secs_f64()
    } else {
        (samples[m - 1].as_secs_f64() + samples[m].as_secs_f64()) / 2.0
    }
}

/// Everything a benchmark run produced.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub report: TimingReport,
    pub forest: Option<Forest>,
    pub serial: Option<SerialRun>,
}

/// Times the actual tree, the serial procedure and the forest build, each
/// `repeats` times in sequence, and reports medians. When the actual tree
/// builds faster than [`MIN_MEASURABLE`] the repeat count is raised and a
/// warning recorded.
pub fn measure_timings(
    dataset: &Dataset,
    folds: &FoldAssignment,
    config: &InductionConfig,
    mode: Mode,
    repeats: usize,
) -> Result<BenchRun> {
    config.validate(dataset)?;
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let all = training_view(dataset, folds, 0)?;
    let mut repeats = repeats;
    let mut warnings = Vec::new();
    loop {
        let mut t_a = Vec::with_capacity(repeats);
        let mut t_s = Vec::with_capacity(repeats);
        let mut t_p = Vec::with_capacity(repeats);
        let mut actual = None;
        let mut serial = None;
        let mut forest = None;
        for _ in 0..repeats {
            let start = Instant::now();
            actual = Some(grow_tree_serial(dataset, &all, config)?);
            t_a.push(start.elapsed());
            if mode.serial() {
                let run = run_serial_cross_validation(dataset, folds, config)?;
                t_s.push(run.total_time);
                serial = Some(run);
            }
            if mode.parallel() {
                let start = Instant::now();
                forest = Some(grow_forest(dataset, folds, config)?);
                t_p.push(start.elapsed());
            }
        }
        let t_a = median(t_a);
        if t_a < MIN_MEASURABLE.as_secs_f64() && repeats < MAX_REPEATS {
            let message = format!(
                "actual tree built in {:.3} ms, below timer resolution; raising repeats from {repeats} to {}",
                t_a * 1e3,
                (repeats * 4).min(MAX_REPEATS)
            );
            log::warn!("{message}");
            warnings.push(message);
            repeats = (repeats * 4).min(MAX_REPEATS);
            continue;
        }
        let actual = actual.expect("at least one repeat");
        let t_s = (!t_s.is_empty()).then(|| median(t_s));
        let t_p = (!t_p.is_empty()).then(|| median(t_p));
        let a = enumerate_tests(dataset, &all).len();
        let serial_counters = serial.as_ref().map(|r| r.profile.counters.clone());
        let parallel_counters = forest.as_ref().map(|f| f.profile.counters.clone());
        let counter_speedup = match (&serial_counters, &parallel_counters) {
            (Some(s), Some(p)) if p.evaluations > 0 => Some(s.evaluations as f64 / p.evaluations as f64),
            _ => None,
        };
        let timed: Vec<&Counters> = serial_counters.iter().chain(parallel_counters.iter()).collect();
        let cost_model = CostModel::from_counters(&timed, a, folds.n()).ok();
        let bound = cost_model.map(|c| c.bound()).transpose()?;
        let speedup_value = t_s.zip(t_p).map(|(s, p)| speedup(s, p));
        let levels = match (&forest, &serial) {
            (Some(f), Some(s)) => per_level_profile(f, s),
            _ => Vec::new(),
        };
        let report = TimingReport {
            n: folds.n(),
            examples: dataset.len(),
            a,
            repeats,
            t_a,
            t_s,
            t_p,
            speedup: speedup_value,
            overhead_serial: t_s.map(|s| overhead_percent(s, t_a)),
            overhead_parallel: t_p.map(|p| overhead_percent(p, t_a)),
            wall_to_counter: speedup_value.zip(counter_speedup).map(|(s, c)| s / c),
            serial_counters,
            parallel_counters,
            counter_speedup,
            cost_model,
            bound,
            actual_tree_nodes: actual.node_count(),
            forest: forest.as_ref().map(forest_metrics),
            levels,
            warnings,
        };
        return Ok(BenchRun { report, forest, serial });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate_synthetic, Regime};

    #[test]
    fn bound_arithmetic() {
        assert_eq!(speedup_bound(10, 50.0, 1.0, 1.0).unwrap().worst, 10.0);
        assert_eq!(speedup_bound(10, 5.0, 1.0, 1.0).unwrap().worst, 6.0);
        let far = speedup_bound(10, 5.0, 1.0, 1e12).unwrap().worst;
        assert!((far - 1.0).abs() < 1e-9);
        assert_eq!(speedup_bound(10, 5.0, 1.0, 1.0).unwrap().best, 10.0);
    }

    #[test]
    fn bound_rejects_bad_input() {
        assert!(speedup_bound(1, 5.0, 1.0, 1.0).is_err());
        assert!(speedup_bound(10, 0.0, 1.0, 1.0).is_err());
        assert!(speedup_bound(10, 5.0, -1.0, 1.0).is_err());
        assert!(speedup_bound(10, 5.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn table_rows() {
        // SB: T_a = 2.6, T_s = 31, T_p = 3.4; Mach: T_a = 0.028, T_p = 0.10
        assert!((overhead_percent(31.0, 2.6) - 1092.3076923076924).abs() < 1e-9);
        assert!((speedup(31.0, 3.4) - 9.117647058823529).abs() < 1e-12);
        assert!((overhead_percent(0.10, 0.028) - 257.14285714285717).abs() < 1e-9);
    }

    #[test]
    fn median_of_samples() {
        let ms = Duration::from_millis;
        assert_eq!(median(vec![ms(3), ms(1), ms(2)]), 0.002);
        assert_eq!(median(vec![ms(4), ms(1), ms(2), ms(3)]), 0.0025);
    }

    #[test]
    fn stable_run_report() {
        let ds = generate_synthetic(Regime::Stable, 2000, 10, 4).unwrap();
        let config = InductionConfig { n: 5, ..InductionConfig::default() };
        let folds = config.folds(&ds).unwrap();
        let run = measure_timings(&ds, &folds, &config, Mode::Both, 1).unwrap();
        let r = &run.report;
        assert_eq!(r.counter_speedup, Some(5.0));
        assert_eq!(r.a, 10);
        let (s, o_s, o_p) = r.recompute_derived();
        assert_eq!(s, r.speedup);
        assert_eq!(o_s, r.overhead_serial);
        assert_eq!(o_p, r.overhead_parallel);
        let back: TimingReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.recompute_derived(), (r.speedup, r.overhead_serial, r.overhead_parallel));
        assert_eq!(r.levels.len(), run.forest.as_ref().unwrap().profile.levels.len());
        let mut out = Vec::new();
        write_level_profile(&r.levels, &mut out, b',').unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), r.levels.len() + 1);
    }

    #[test]
    fn depth_one_forest_has_one_row() {
        let ds = generate_synthetic(Regime::Stable, 50, 1, 2).unwrap();
        let pure = Dataset::new(
            ds.schema().clone(),
            vec![ds.column(0).clone()],
            crate::data::TargetColumn::Class(vec![1; 50]),
        )
        .unwrap();
        let config = InductionConfig { n: 5, ..InductionConfig::default() };
        let folds = config.folds(&pure).unwrap();
        let run = measure_timings(&pure, &folds, &config, Mode::Both, 1).unwrap();
        assert_eq!(run.report.levels.len(), 1);
        assert!(run.report.cost_model.is_none());
    }
}
