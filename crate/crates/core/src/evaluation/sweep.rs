//! Exact threshold search by event sweep.
//!
//! Both objectives are piecewise constant in `t` and right-continuous, with
//! breakpoints only at observed metric values, so evaluating the count just
//! after processing every event at a position visits every attainable value.

use std::cmp::Ordering;

/// Best threshold found by a sweep. `threshold` is `None` when no candidate
/// beats the count available below every observed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SweepBest {
    pub count: usize,
    pub threshold: Option<f64>,
}

fn sweep(mut events: Vec<(f64, i64)>, base: i64) -> SweepBest {
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(Ordering::Equal));
    let mut count = base;
    let mut best = SweepBest {
        count: base as usize,
        threshold: None,
    };
    let mut i = 0;
    while i < events.len() {
        let pos = events[i].0;
        while i < events.len() && events[i].0 == pos {
            count += events[i].1;
            i += 1;
        }
        if count > best.count as i64 {
            best = SweepBest {
                count: count as usize,
                threshold: Some(pos),
            };
        }
    }
    best
}

/// Maximizes `#{s : lo_s ≤ t < hi_s}` and returns the smallest maximizer.
pub(crate) fn best_interval_threshold(
    intervals: impl IntoIterator<Item = (f64, f64)>,
) -> SweepBest {
    let mut events = Vec::new();
    for (lo, hi) in intervals {
        if lo < hi {
            events.push((lo, 1));
            events.push((hi, -1));
        }
    }
    sweep(events, 0)
}

/// Maximizes `#{p ∈ positives : p > t} + #{q ∈ negatives : q ≤ t}`.
pub(crate) fn best_separating_threshold(positives: &[f64], negatives: &[f64]) -> SweepBest {
    let events = negatives
        .iter()
        .map(|&q| (q, 1))
        .chain(positives.iter().map(|&p| (p, -1)))
        .collect();
    sweep(events, positives.len() as i64)
}
