//! Operation counters and per-level timing collected during induction.

use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Work counters. Both the serial and the parallel builders maintain them the
/// same way, so ratios between runs are meaningful.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    /// Example-test evaluations that updated a statistics matrix.
    pub evaluations: u64,
    /// Examples sorted into a child bucket.
    pub partitions: u64,
    /// Full passes over the dataset (level-wise induction only).
    pub data_passes: u64,
    /// Largest number of frontier nodes a single example was routed to in one
    /// level-wise pass.
    pub max_node_memberships: u64,
    /// Time spent accumulating test statistics.
    pub accumulate_time: Duration,
    /// Time spent partitioning examples into children.
    pub partition_time: Duration,
}

impl Counters {
    pub fn merge(&mut self, other: &Counters) {
        self.evaluations += other.evaluations;
        self.partitions += other.partitions;
        self.data_passes += other.data_passes;
        self.max_node_memberships = self.max_node_memberships.max(other.max_node_memberships);
        self.accumulate_time += other.accumulate_time;
        self.partition_time += other.partition_time;
    }
}

/// Work done on one depth of a tree or forest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelWork {
    pub level: usize,
    /// Summed refinement time of all nodes on this level.
    pub refine_time: Duration,
    /// Nodes refined on this level.
    pub nodes: usize,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildProfile {
    pub counters: Counters,
    pub levels: Vec<LevelWork>,
}

impl BuildProfile {
    pub(crate) fn level_mut(&mut self, level: usize) -> &mut LevelWork {
        while self.levels.len() <= level {
            let next = self.levels.len();
            self.levels.push(LevelWork {
                level: next,
                ..LevelWork::default()
            });
        }
        &mut self.levels[level]
    }

    pub(crate) fn record_node(&mut self, level: usize, elapsed: Duration, evaluations: u64) {
        let work = self.level_mut(level);
        work.refine_time += elapsed;
        work.nodes += 1;
        work.evaluations += evaluations;
    }

    /// Adds another build's work, level by level.
    pub fn merge(&mut self, other: &BuildProfile) {
        self.counters.merge(&other.counters);
        for w in &other.levels {
            let mine = self.level_mut(w.level);
            mine.refine_time += w.refine_time;
            mine.nodes += w.nodes;
            mine.evaluations += w.evaluations;
        }
    }
}
