//! Aggregate metrics over simulation records.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::engine::{Classification, DelayComponents, TaskRecord};
use crate::orbital::ZoneId;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no tasks to average")]
    Empty,
}

/// Mean task delay, counting failed tasks at the threshold.
pub fn weighted_average_delay(
    records: &[TaskRecord],
    threshold_s: f64,
) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sum: f64 = records
        .iter()
        .map(|r| if r.success { r.delay_s } else { threshold_s })
        .sum();
    Ok(sum / records.len() as f64)
}

pub fn success_rate(records: &[TaskRecord]) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(records.iter().filter(|r| r.success).count() as f64 / records.len() as f64)
}

/// `(task id, subtask index)`.
pub type SubtaskKey = (u64, usize);

/// Subtasks the given records sent to a satellite the source cannot see.
pub fn invisible_subtasks(records: &[TaskRecord]) -> HashSet<SubtaskKey> {
    records
        .iter()
        .filter(|r| r.success)
        .flat_map(|r| {
            r.decisions
                .iter()
                .filter(|d| d.classification == Classification::InvisibleSatellite)
                .map(move |d| (r.task.id, d.subtask))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Breakdown {
    pub means: DelayComponents,
    pub subtasks: usize,
}

/// Per-component means over the subtasks of successful tasks, optionally
/// restricted to the keys in `only`.
pub fn delay_breakdown(records: &[TaskRecord], only: Option<&HashSet<SubtaskKey>>) -> Breakdown {
    let mut sum = DelayComponents::default();
    let mut n = 0;
    for r in records.iter().filter(|r| r.success) {
        for d in &r.decisions {
            if only.is_some_and(|keys| !keys.contains(&(r.task.id, d.subtask))) {
                continue;
            }
            sum.add(&d.components);
            n += 1;
        }
    }
    Breakdown {
        means: if n == 0 {
            sum
        } else {
            sum.scale(1.0 / n as f64)
        },
        subtasks: n,
    }
}

/// Compute-zone counts per classification. Subtasks of failed tasks have no
/// target and are counted as unassigned.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TargetDistribution {
    pub counts: BTreeMap<(ZoneId, Classification), usize>,
    pub unassigned: usize,
}

impl TargetDistribution {
    pub fn total(&self) -> usize {
        self.counts.values().sum::<usize>() + self.unassigned
    }

    pub fn count_of(&self, class: Classification) -> usize {
        self.counts
            .iter()
            .filter(|((_, c), _)| *c == class)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn share_of(&self, class: Classification) -> f64 {
        match self.total() {
            0 => 0.0,
            total => self.count_of(class) as f64 / total as f64,
        }
    }
}

pub fn target_distribution(records: &[TaskRecord]) -> TargetDistribution {
    let mut dist = TargetDistribution::default();
    for r in records {
        if !r.success {
            dist.unassigned += r.task.num_subtasks;
            continue;
        }
        for d in &r.decisions {
            *dist
                .counts
                .entry((d.target_zone, d.classification))
                .or_default() += 1;
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub tasks: usize,
    /// `None` without tasks.
    pub weighted_average_delay_s: Option<f64>,
    pub success_rate: Option<f64>,
    pub breakdown: Breakdown,
    pub target_distribution: TargetDistribution,
}

pub fn report(records: &[TaskRecord], threshold_s: f64) -> MetricsReport {
    MetricsReport {
        tasks: records.len(),
        weighted_average_delay_s: weighted_average_delay(records, threshold_s).ok(),
        success_rate: success_rate(records).ok(),
        breakdown: delay_breakdown(records, None),
        target_distribution: target_distribution(records),
    }
}
