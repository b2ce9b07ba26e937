use serde::{Deserialize, Serialize};

use crate::classifier::MetricBatch;
use crate::error::{Error, Result};

/// `entries[i][j] = c_i(x^(j))` over one chosen sample per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMatrix {
    pub entries: Vec<Vec<f64>>,
    pub sample_ids: Vec<usize>,
    /// Every diagonal entry is strictly larger than the rest of its column.
    pub column_dominant: bool,
    /// Every diagonal entry is strictly larger than every off-diagonal entry.
    pub global_dominant: bool,
}

/// Builds the metric matrix from `sample_ids`, which must name exactly one
/// sample of each class (in any order).
pub fn metric_matrix(batch: &MetricBatch, sample_ids: &[usize]) -> Result<MetricMatrix> {
    let n = batch.num_classes();
    if sample_ids.len() != n {
        return Err(Error::InvalidSelection(format!(
            "expected {n} sample ids, got {}",
            sample_ids.len()
        )));
    }
    let mut by_class: Vec<Option<usize>> = vec![None; n];
    for &s in sample_ids {
        if s >= batch.len() {
            return Err(Error::InvalidSelection(format!(
                "sample id {s} out of range"
            )));
        }
        let label = batch.labels()[s];
        if by_class[label].replace(s).is_some() {
            return Err(Error::InvalidSelection(format!(
                "class {label} selected twice"
            )));
        }
    }
    let ordered: Vec<usize> = by_class
        .into_iter()
        .enumerate()
        .map(|(c, s)| s.ok_or_else(|| Error::InvalidSelection(format!("class {c} missing"))))
        .collect::<Result<_>>()?;

    let entries: Vec<Vec<f64>> = (0..n)
        .map(|i| ordered.iter().map(|&s| batch.row(s)[i]).collect())
        .collect();
    let column_dominant = (0..n).all(|j| {
        (0..n)
            .filter(|&i| i != j)
            .all(|i| entries[j][j] > entries[i][j])
    });
    let min_diag = (0..n).map(|i| entries[i][i]).fold(f64::INFINITY, f64::min);
    let max_off = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| entries[i][j])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MetricMatrix {
        entries,
        sample_ids: ordered,
        column_dominant,
        global_dominant: min_diag > max_off,
    })
}
