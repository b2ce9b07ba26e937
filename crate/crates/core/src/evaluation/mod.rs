//! Sample-wise, class-wise uniform and uniform accuracies.
//!
//! A sample of class `i` is
//! * sample-wise classified iff `c_i(x) > max_{j≠i} c_j(x)`;
//! * uniformly classified at `t` iff `c_i(x) > t ≥ max_{j≠i} c_j(x)`;
//! * class-wise uniformly classified at `{t_i}` iff the same holds with the
//!   threshold `t_i` of its own class.
//!
//! Hence `A_Uni ≤ A_CW ≤ A_SW` for every batch. All optimal thresholds are
//! found exactly by an `O(n log n)` sweep; ties resolve to the smallest
//! attaining value.

mod distribution;
mod matrix;
mod sweep;

pub use distribution::{distribution_report, DistributionReport, Histogram};
pub use matrix::{metric_matrix, MetricMatrix};

use serde::{Deserialize, Serialize};

use crate::classifier::MetricBatch;
use sweep::{best_interval_threshold, best_separating_threshold, SweepBest};

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64 * 100.0
    }
}

/// Value strictly below every metric in the batch, used as the threshold
/// when nothing can be classified.
fn below_all(batch: &MetricBatch) -> f64 {
    batch.min_value() - 1.0
}

/// Sample-wise accuracy (percent) and the per-sample correctness mask.
/// Ties count as misclassified.
pub fn sample_wise_accuracy(batch: &MetricBatch) -> (f64, Vec<bool>) {
    let mask: Vec<bool> = (0..batch.len())
        .map(|s| batch.positive(s) > batch.max_negative(s))
        .collect();
    let count = mask.iter().filter(|&&c| c).count();
    (percent(count, batch.len()), mask)
}

/// Result of an optimal unified-threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformFit {
    pub percent: f64,
    pub count: usize,
    pub total: usize,
    pub threshold: f64,
}

fn uniform_fit(
    batch: &MetricBatch,
    samples: impl Iterator<Item = usize>,
    fallback: f64,
) -> (SweepBest, f64) {
    let best = best_interval_threshold(samples.map(|s| (batch.max_negative(s), batch.positive(s))));
    let t = best.threshold.unwrap_or(fallback);
    (best, t)
}

/// Uniform accuracy: the best fraction over all unified thresholds `t`.
pub fn uniform_fit_batch(batch: &MetricBatch) -> UniformFit {
    let (best, threshold) = uniform_fit(batch, 0..batch.len(), below_all(batch));
    UniformFit {
        percent: percent(best.count, batch.len()),
        count: best.count,
        total: batch.len(),
        threshold,
    }
}

/// Uniform accuracy (percent) and the smallest optimal threshold `t*`.
pub fn uniform_accuracy(batch: &MetricBatch) -> (f64, f64) {
    let fit = uniform_fit_batch(batch);
    (fit.percent, fit.threshold)
}

/// Number of samples uniformly classified at the fixed threshold `t`.
pub fn uniform_count_at(batch: &MetricBatch, t: f64) -> usize {
    (0..batch.len())
        .filter(|&s| batch.positive(s) > t && t >= batch.max_negative(s))
        .count()
}

/// Uniform accuracy (percent) at a fixed threshold.
pub fn uniform_accuracy_at(batch: &MetricBatch, t: f64) -> f64 {
    percent(uniform_count_at(batch, t), batch.len())
}

/// Result of a per-class threshold search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWiseFit {
    pub percent: f64,
    pub count: usize,
    pub total: usize,
    /// `None` for classes without samples.
    pub thresholds: Vec<Option<f64>>,
    pub per_class_counts: Vec<usize>,
}

fn class_members(batch: &MetricBatch) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); batch.num_classes()];
    for (s, &l) in batch.labels().iter().enumerate() {
        members[l].push(s);
    }
    members
}

/// Class-wise uniform accuracy with one threshold per class, separating
/// each class's positives from its type I negatives `c_j(x^(i))`.
pub fn class_wise_fit(batch: &MetricBatch) -> ClassWiseFit {
    let members = class_members(batch);
    let mut thresholds = Vec::with_capacity(members.len());
    let mut per_class_counts = Vec::with_capacity(members.len());
    for idx in &members {
        if idx.is_empty() {
            thresholds.push(None);
            per_class_counts.push(0);
            continue;
        }
        let fallback = idx
            .iter()
            .flat_map(|&s| batch.row(s).iter().copied())
            .fold(f64::INFINITY, f64::min)
            - 1.0;
        let (best, t) = uniform_fit(batch, idx.iter().copied(), fallback);
        thresholds.push(Some(t));
        per_class_counts.push(best.count);
    }
    let count = per_class_counts.iter().sum();
    ClassWiseFit {
        percent: percent(count, batch.len()),
        count,
        total: batch.len(),
        thresholds,
        per_class_counts,
    }
}

/// Class-wise uniform accuracy (percent) and the optimal `{t_i*}`.
pub fn class_wise_uniform_accuracy(batch: &MetricBatch) -> (f64, Vec<Option<f64>>) {
    let fit = class_wise_fit(batch);
    (fit.percent, fit.thresholds)
}

/// Type II diagnostic: for every class `i` with samples, a threshold on the
/// metric column `c_i` separating the class's positives `c_i(x^(i))` from the
/// type II negatives `c_i(x^(j))`, `j ≠ i`.
///
/// Each column is scored entry-wise: a positive entry is correct when it
/// lies above the column threshold and a type II negative when it lies at or
/// below it. `count`/`total` tally entries over all non-empty columns.
pub fn class_wise_type2_fit(batch: &MetricBatch) -> ClassWiseFit {
    let n = batch.num_classes();
    let mut thresholds = Vec::with_capacity(n);
    let mut per_class_counts = Vec::with_capacity(n);
    let mut total = 0;
    for i in 0..n {
        let (pos, neg): (Vec<_>, Vec<_>) = batch.rows().partition(|&(_, label)| label == i);
        if pos.is_empty() {
            thresholds.push(None);
            per_class_counts.push(0);
            continue;
        }
        let pos: Vec<f64> = pos.iter().map(|(row, _)| row[i]).collect();
        let neg: Vec<f64> = neg.iter().map(|(row, _)| row[i]).collect();
        let fallback = pos
            .iter()
            .chain(&neg)
            .copied()
            .fold(f64::INFINITY, f64::min)
            - 1.0;
        let best = best_separating_threshold(&pos, &neg);
        thresholds.push(Some(best.threshold.unwrap_or(fallback)));
        per_class_counts.push(best.count);
        total += pos.len() + neg.len();
    }
    let count = per_class_counts.iter().sum();
    ClassWiseFit {
        percent: percent(count, total),
        count,
        total,
        thresholds,
        per_class_counts,
    }
}

/// Type II accuracy (percent) and per-class thresholds.
pub fn class_wise_type2_accuracy(batch: &MetricBatch) -> (f64, Vec<Option<f64>>) {
    let fit = class_wise_type2_fit(batch);
    (fit.percent, fit.thresholds)
}

/// The three accuracies of one batch and the thresholds attaining them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub a_sw: f64,
    pub a_cw: f64,
    pub a_uni: f64,
    pub t_star: f64,
    pub t_star_per_class: Vec<Option<f64>>,
    pub num_samples: usize,
    pub sw_count: usize,
    pub cw_count: usize,
    pub uni_count: usize,
    pub bias_included: bool,
}

/// Computes all three accuracies. Panics if the hierarchy
/// `A_Uni ≤ A_CW ≤ A_SW` is violated, which would be a bug in this module.
pub fn evaluate(batch: &MetricBatch) -> AccuracyReport {
    let (_, mask) = sample_wise_accuracy(batch);
    let sw_count = mask.iter().filter(|&&c| c).count();
    let uni = uniform_fit_batch(batch);
    let cw = class_wise_fit(batch);
    assert!(
        uni.count <= cw.count && cw.count <= sw_count,
        "accuracy hierarchy violated: uni {} cw {} sw {}",
        uni.count,
        cw.count,
        sw_count
    );
    AccuracyReport {
        a_sw: percent(sw_count, batch.len()),
        a_cw: cw.percent,
        a_uni: uni.percent,
        t_star: uni.threshold,
        t_star_per_class: cw.thresholds,
        num_samples: batch.len(),
        sw_count,
        cw_count: cw.count,
        uni_count: uni.count,
        bias_included: batch.bias_included(),
    }
}

impl AccuracyReport {
    pub fn hierarchy_holds(&self) -> bool {
        self.uni_count <= self.cw_count && self.cw_count <= self.sw_count
    }
}
