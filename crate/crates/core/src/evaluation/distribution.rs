use serde::{Deserialize, Serialize};

use super::sample_wise_accuracy;
use crate::classifier::MetricBatch;
use crate::error::{Error, Result};
use crate::numeric::mean_std;

/// Fixed-width histogram of positive and negative metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `num_bins + 1` ascending edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub pos_counts: Vec<usize>,
    pub neg_counts: Vec<usize>,
}

impl Histogram {
    fn new(lo: f64, hi: f64, num_bins: usize) -> Self {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        };
        let width = (hi - lo) / num_bins as f64;
        let mut edges: Vec<f64> = (0..num_bins).map(|k| lo + k as f64 * width).collect();
        edges.push(hi);
        Histogram {
            edges,
            pos_counts: vec![0; num_bins],
            neg_counts: vec![0; num_bins],
        }
    }

    pub fn num_bins(&self) -> usize {
        self.pos_counts.len()
    }

    fn bin(&self, v: f64) -> usize {
        let lo = self.edges[0];
        let hi = self.edges[self.num_bins()];
        let k = ((v - lo) / (hi - lo) * self.num_bins() as f64).floor();
        (k.max(0.0) as usize).min(self.num_bins() - 1)
    }
}

/// Positive / negative metric statistics over the sample-wise correct samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub num_samples_used: usize,
    pub min_pos: f64,
    pub max_neg: f64,
    /// `(min_pos, max_neg)` when the two ranges overlap.
    pub overlap_interval: Option<(f64, f64)>,
    pub overlap_width: f64,
    /// `None` for classes without a correct sample.
    pub per_class_min_pos: Vec<Option<f64>>,
    pub per_class_max_neg: Vec<Option<f64>>,
    pub mean_min_pos: f64,
    pub mean_max_neg: f64,
    /// Population standard deviations over classes that have entries.
    pub std_min_pos: f64,
    pub std_max_neg: f64,
    pub histogram: Histogram,
}

pub fn distribution_report(batch: &MetricBatch, num_bins: usize) -> Result<DistributionReport> {
    if num_bins == 0 {
        return Err(Error::InvalidConfig(
            "histogram needs at least one bin".into(),
        ));
    }
    let (_, mask) = sample_wise_accuracy(batch);
    let used: Vec<usize> = (0..batch.len()).filter(|&s| mask[s]).collect();
    if used.is_empty() {
        return Err(Error::NoCorrectSamples);
    }
    let n = batch.num_classes();
    let mut per_class_min_pos: Vec<Option<f64>> = vec![None; n];
    let mut per_class_max_neg: Vec<Option<f64>> = vec![None; n];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &s in &used {
        let label = batch.labels()[s];
        let pos = batch.positive(s);
        let neg = batch.max_negative(s);
        let mp = per_class_min_pos[label].get_or_insert(pos);
        *mp = mp.min(pos);
        let mn = per_class_max_neg[label].get_or_insert(neg);
        *mn = mn.max(neg);
        for &v in batch.row(s) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let mut histogram = Histogram::new(lo, hi, num_bins);
    for &s in &used {
        let label = batch.labels()[s];
        for (j, &v) in batch.row(s).iter().enumerate() {
            let k = histogram.bin(v);
            if j == label {
                histogram.pos_counts[k] += 1;
            } else {
                histogram.neg_counts[k] += 1;
            }
        }
    }

    let min_pos = per_class_min_pos
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let max_neg = per_class_max_neg
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let (overlap_interval, overlap_width) = if max_neg > min_pos {
        (Some((min_pos, max_neg)), max_neg - min_pos)
    } else {
        (None, 0.0)
    };
    let mins: Vec<f64> = per_class_min_pos.iter().flatten().copied().collect();
    let maxs: Vec<f64> = per_class_max_neg.iter().flatten().copied().collect();
    let (mean_min_pos, std_min_pos) = mean_std(&mins);
    let (mean_max_neg, std_max_neg) = mean_std(&maxs);
    Ok(DistributionReport {
        num_samples_used: used.len(),
        min_pos,
        max_neg,
        overlap_interval,
        overlap_width,
        per_class_min_pos,
        per_class_max_neg,
        mean_min_pos,
        mean_max_neg,
        std_min_pos,
        std_max_neg,
        histogram,
    })
}
