//! Domain types and the classifier-head forward map.
//!
//! A [`ClassifierHead`] turns a feature vector into `N` classification
//! metrics. Two families exist: the ordinary linear map `W_iᵀx` and the
//! normalized map `γ·cos(W_i, x)`. When the bias is folded in, the stored
//! metric is the signed quantity that the matching loss consumes:
//! `W_iᵀx + b_i` for the linear family and `γ·cos(W_i, x) − b_i` for the
//! normalized family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, NormOperand, Result};
use crate::numeric::{dot, norm, softmax};

/// Norms at or below this value are rejected by the normalized family.
pub const MIN_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Normalized,
}

impl Family {
    /// Sign with which the bias enters the metric.
    pub fn bias_sign(self) -> f64 {
        match self {
            Family::Linear => 1.0,
            Family::Normalized => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasMode {
    Zero,
    Diverse,
    Unified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("feature vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        Ok(FeatureVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Feature vectors with 0-based class labels in `[0, num_classes)`.
///
/// Classes may be empty (e.g. a label gap in an imported file); class-wise
/// metrics report such classes without a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Vec<FeatureVector>,
    labels: Vec<usize>,
    num_classes: usize,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<FeatureVector>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::TooFewClasses(num_classes));
        }
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "dataset labels",
                expected: features.len(),
                actual: labels.len(),
            });
        }
        let dim = features.first().map_or(0, FeatureVector::len);
        if let Some(bad) = features.iter().find(|f| f.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "dataset feature",
                expected: dim,
                actual: bad.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        Ok(LabeledDataset {
            features,
            labels,
            num_classes,
            dim,
        })
    }

    /// Convenience constructor from plain rows.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let features = rows
            .into_iter()
            .map(FeatureVector::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(features, labels, num_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &[FeatureVector] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, index: usize) -> (&FeatureVector, usize) {
        (&self.features[index], self.labels[index])
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        self.labels.iter().for_each(|&l| counts[l] += 1);
        counts
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            dim: self.dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HeadRepr {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    bias_mode: BiasMode,
    family: Family,
    gamma: f64,
}

/// Classifier head: `N` weight columns of length `M`, a bias vector and the
/// declared bias mode and family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HeadRepr", into = "HeadRepr")]
pub struct ClassifierHead {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    bias_mode: BiasMode,
    family: Family,
    gamma: f64,
}

impl TryFrom<HeadRepr> for ClassifierHead {
    type Error = Error;

    fn try_from(r: HeadRepr) -> Result<Self> {
        ClassifierHead::new(r.weights, r.bias, r.bias_mode, r.family, r.gamma)
    }
}

impl From<ClassifierHead> for HeadRepr {
    fn from(h: ClassifierHead) -> Self {
        HeadRepr {
            weights: h.weights,
            bias: h.bias,
            bias_mode: h.bias_mode,
            family: h.family,
            gamma: h.gamma,
        }
    }
}

impl ClassifierHead {
    /// `weights[i]` is the column `W_i`. `gamma` is ignored by the linear
    /// family but must still be positive and finite.
    pub fn new(
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        bias_mode: BiasMode,
        family: Family,
        gamma: f64,
    ) -> Result<Self> {
        let n = weights.len();
        if n < 2 {
            return Err(Error::TooFewClasses(n));
        }
        let m = weights[0].len();
        if m == 0 {
            return Err(Error::InvalidHead("weight columns are empty".into()));
        }
        if let Some(col) = weights.iter().find(|c| c.len() != m) {
            return Err(Error::DimensionMismatch {
                context: "weight column",
                expected: m,
                actual: col.len(),
            });
        }
        if bias.len() != n {
            return Err(Error::DimensionMismatch {
                context: "bias vector",
                expected: n,
                actual: bias.len(),
            });
        }
        if weights
            .iter()
            .flatten()
            .chain(&bias)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("classifier head"));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidHead(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        check_bias_mode(&bias, bias_mode).map_err(Error::InvalidHead)?;
        Ok(ClassifierHead {
            weights,
            bias,
            bias_mode,
            family,
            gamma,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mode(&self) -> BiasMode {
        self.bias_mode
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Threshold on raw (bias-free) metrics implied by a unified bias:
    /// `−b` for the linear family, `b` for the normalized family.
    pub fn unified_threshold(&self) -> Option<f64> {
        match self.bias_mode {
            BiasMode::Unified => Some(-self.family.bias_sign() * self.bias[0]),
            _ => None,
        }
    }

    /// Bias-free metrics `c_j(x)` for one feature.
    pub fn raw_metrics(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "feature vs head",
                expected: self.dim(),
                actual: x.len(),
            });
        }
        match self.family {
            Family::Linear => Ok(self.weights.iter().map(|w| dot(w, x)).collect()),
            Family::Normalized => {
                let xn = norm(x);
                if xn <= MIN_NORM {
                    return Err(Error::ZeroNorm {
                        operand: NormOperand::Feature,
                        index: 0,
                    });
                }
                self.weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        let wn = norm(w);
                        if wn <= MIN_NORM {
                            return Err(Error::ZeroNorm {
                                operand: NormOperand::WeightColumn,
                                index: i,
                            });
                        }
                        Ok(self.gamma * dot(w, x) / (wn * xn))
                    })
                    .collect()
            }
        }
    }

    /// Metrics with the signed bias folded in when `include_bias` is set.
    pub fn metrics(&self, x: &[f64], include_bias: bool) -> Result<Vec<f64>> {
        let mut row = self.raw_metrics(x)?;
        if include_bias {
            let sign = self.family.bias_sign();
            row.iter_mut()
                .zip(&self.bias)
                .for_each(|(c, b)| *c += sign * b);
        }
        Ok(row)
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    /// Subtracts `step` from the bias, keeping the mode's invariant.
    pub(crate) fn apply_bias_step(&mut self, step: &[f64]) {
        match self.bias_mode {
            BiasMode::Zero => {}
            BiasMode::Diverse => self.bias.iter_mut().zip(step).for_each(|(b, s)| *b -= s),
            BiasMode::Unified => {
                let b = self.bias[0] - step[0];
                self.bias.iter_mut().for_each(|v| *v = b);
            }
        }
    }
}

pub(crate) fn check_bias_mode(bias: &[f64], mode: BiasMode) -> std::result::Result<(), String> {
    match mode {
        BiasMode::Zero if bias.iter().any(|&b| b != 0.0) => {
            Err("bias mode 'zero' requires an all-zero bias".into())
        }
        BiasMode::Unified if bias.iter().any(|&b| b != bias[0]) => {
            Err("bias mode 'unified' requires all bias entries to be equal".into())
        }
        _ => Ok(()),
    }
}

/// Per-sample classification metrics with their true labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBatch {
    values: Vec<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    bias_included: bool,
}

impl MetricBatch {
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        num_classes: usize,
        bias_included: bool,
    ) -> Result<Self> {
        if let Some(row) = rows.iter().find(|r| r.len() != num_classes) {
            return Err(Error::DimensionMismatch {
                context: "metric row",
                expected: num_classes,
                actual: row.len(),
            });
        }
        Self::from_flat(rows.concat(), labels, num_classes, bias_included)
    }

    /// `values` holds `labels.len()` rows of `num_classes` entries each.
    pub fn from_flat(
        values: Vec<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        bias_included: bool,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::TooFewClasses(num_classes));
        }
        if labels.is_empty() {
            return Err(Error::Empty("metric batch"));
        }
        if values.len() != labels.len() * num_classes {
            return Err(Error::DimensionMismatch {
                context: "metric values",
                expected: labels.len() * num_classes,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("metric batch"));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        Ok(MetricBatch {
            values,
            labels,
            num_classes,
            bias_included,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn bias_included(&self) -> bool {
        self.bias_included
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        &self.values[sample * self.num_classes..(sample + 1) * self.num_classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], usize)> + '_ {
        self.values
            .chunks_exact(self.num_classes)
            .zip(self.labels.iter().copied())
    }

    /// Positive metric `c_label(x_s)`.
    pub fn positive(&self, sample: usize) -> f64 {
        self.row(sample)[self.labels[sample]]
    }

    /// Largest type I negative metric `max_{j≠label} c_j(x_s)`.
    pub fn max_negative(&self, sample: usize) -> f64 {
        let label = self.labels[sample];
        self.row(sample)
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != label)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rows at `indices`, in that order. Panics on an empty selection.
    pub fn select(&self, indices: &[usize]) -> MetricBatch {
        assert!(!indices.is_empty(), "empty selection");
        MetricBatch {
            values: indices
                .iter()
                .flat_map(|&i| self.row(i).iter().copied())
                .collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            bias_included: self.bias_included,
        }
    }
}

/// Applies `head` to every sample of `data`.
pub fn compute_metrics(
    head: &ClassifierHead,
    data: &LabeledDataset,
    include_bias: bool,
) -> Result<MetricBatch> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if data.dim() != head.dim() {
        return Err(Error::DimensionMismatch {
            context: "dataset vs head",
            expected: head.dim(),
            actual: data.dim(),
        });
    }
    if data.num_classes() != head.num_classes() {
        return Err(Error::DimensionMismatch {
            context: "class count of dataset vs head",
            expected: head.num_classes(),
            actual: data.num_classes(),
        });
    }
    let mut values = Vec::with_capacity(data.len() * head.num_classes());
    for (s, x) in data.features().iter().enumerate() {
        let row = head
            .metrics(x.as_slice(), include_bias)
            .map_err(|e| match e {
                Error::ZeroNorm {
                    operand: NormOperand::Feature,
                    ..
                } => Error::ZeroNorm {
                    operand: NormOperand::Feature,
                    index: s,
                },
                other => other,
            })?;
        values.extend(row);
    }
    MetricBatch::from_flat(
        values,
        data.labels().to_vec(),
        head.num_classes(),
        include_bias,
    )
}

/// Replaces every row by its softmax. Per-row ordering is preserved.
pub fn softmax_transform(batch: &MetricBatch) -> MetricBatch {
    let values = batch
        .values
        .chunks_exact(batch.num_classes)
        .flat_map(softmax)
        .collect();
    MetricBatch {
        values,
        labels: batch.labels.clone(),
        num_classes: batch.num_classes,
        bias_included: batch.bias_included,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_head(family: Family, gamma: f64) -> ClassifierHead {
        ClassifierHead::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
            BiasMode::Zero,
            family,
            gamma,
        )
        .unwrap()
    }

    #[test]
    fn identity_linear_metrics() {
        let head = identity_head(Family::Linear, 1.0);
        let data = LabeledDataset::from_rows(vec![vec![2.0, 1.0]], vec![0], 2).unwrap();
        let batch = compute_metrics(&head, &data, true).unwrap();
        assert_eq!(batch.row(0), &[2.0, 1.0]);
        assert!(batch.bias_included());
    }

    #[test]
    fn normalized_parallel_and_orthogonal() {
        let head = identity_head(Family::Normalized, 96.0);
        let row = head.metrics(&[1.0, 0.0], true).unwrap();
        assert_eq!(row, vec![96.0, 0.0]);
        let row = head.metrics(&[0.0, 1.0], true).unwrap();
        assert_eq!(row[0], 0.0);
    }

    #[test]
    fn bias_sign_follows_family() {
        let w = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let lin = ClassifierHead::new(
            w.clone(),
            vec![0.5, -1.0],
            BiasMode::Diverse,
            Family::Linear,
            1.0,
        )
        .unwrap();
        assert_eq!(lin.metrics(&[1.0, 1.0], true).unwrap(), vec![1.5, 0.0]);
        let nor = ClassifierHead::new(
            w,
            vec![0.5, -1.0],
            BiasMode::Diverse,
            Family::Normalized,
            2.0,
        )
        .unwrap();
        let row = nor.metrics(&[1.0, 0.0], true).unwrap();
        assert_eq!(row, vec![1.5, 1.0]);
    }

    #[test]
    fn zero_norm_feature_names_sample() {
        let head = identity_head(Family::Normalized, 1.0);
        let data =
            LabeledDataset::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![0, 1], 2).unwrap();
        match compute_metrics(&head, &data, false) {
            Err(Error::ZeroNorm {
                operand: NormOperand::Feature,
                index: 1,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_norm_weight_column_is_reported() {
        let head = ClassifierHead::new(
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
            vec![0.0, 0.0],
            BiasMode::Zero,
            Family::Normalized,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            head.raw_metrics(&[1.0, 1.0]),
            Err(Error::ZeroNorm {
                operand: NormOperand::WeightColumn,
                index: 1
            })
        ));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let head = identity_head(Family::Linear, 1.0);
        let data = LabeledDataset::from_rows(vec![vec![1.0, 2.0, 3.0]], vec![0], 2).unwrap();
        assert!(matches!(
            compute_metrics(&head, &data, true),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn head_rejects_broken_bias_modes() {
        let w = vec![vec![1.0], vec![1.0]];
        assert!(ClassifierHead::new(
            w.clone(),
            vec![0.0, 0.1],
            BiasMode::Zero,
            Family::Linear,
            1.0
        )
        .is_err());
        assert!(ClassifierHead::new(
            w.clone(),
            vec![0.2, 0.1],
            BiasMode::Unified,
            Family::Linear,
            1.0
        )
        .is_err());
        assert!(
            ClassifierHead::new(w, vec![0.0, 0.0], BiasMode::Zero, Family::Normalized, 0.0)
                .is_err()
        );
    }

    #[test]
    fn head_json_is_validated() {
        let bad = r#"{"weights":[[1.0],[1.0]],"bias":[1.0,2.0],"bias_mode":"unified","family":"linear","gamma":1.0}"#;
        assert!(serde_json::from_str::<ClassifierHead>(bad).is_err());
    }

    #[test]
    fn softmax_rows() {
        let batch =
            MetricBatch::new(vec![vec![0.0, 0.0], vec![1.0, 2.0]], vec![0, 1], 2, true).unwrap();
        let out = softmax_transform(&batch);
        assert_eq!(out.row(0), &[0.5, 0.5]);
        let b3 = MetricBatch::new(vec![vec![1.0, 2.0, 3.0]], vec![2], 3, false).unwrap();
        let r = softmax_transform(&b3);
        let expected = [0.09003057317038046, 0.24472847105479767, 0.6652409557748219];
        for (a, e) in r.row(0).iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!((r.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compute_metrics_is_deterministic() {
        let head = ClassifierHead::new(
            vec![vec![0.3, -1.2, 0.7], vec![2.0, 0.1, -0.4]],
            vec![0.25, 0.25],
            BiasMode::Unified,
            Family::Normalized,
            16.0,
        )
        .unwrap();
        let data = LabeledDataset::from_rows(
            vec![vec![0.1, 0.2, 0.3], vec![-1.0, 4.0, 0.5]],
            vec![0, 1],
            2,
        )
        .unwrap();
        let a = compute_metrics(&head, &data, true).unwrap();
        let b = compute_metrics(&head, &data, true).unwrap();
        assert_eq!(
            a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(a.values().iter().all(|v| v.abs() <= 16.0 + 0.25 + 1e-12));
    }
}
