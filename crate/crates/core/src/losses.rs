//! Loss values and analytic gradients.
//!
//! Covers the twelve SoftMax/BCE variants (formula × classifier family ×
//! bias mode), the naive margin loss and the class-wise BCE family in which
//! every loss term of a class-`i` sample shares the single bias `b_i`.
//!
//! All evaluation goes through log-sum-exp and softplus, so no finite input
//! overflows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::{
    check_bias_mode, BiasMode, ClassifierHead, Family, FeatureVector, LabeledDataset,
};
use crate::error::{Error, Result};
use crate::numeric::{dot, log_sum_exp, norm, sigmoid, softmax, softplus, NeumaierSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Softmax,
    Bce,
    Naive,
    BceClasswise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    formula: Formula,
    family: Family,
    bias_mode: BiasMode,
    gamma: f64,
}

/// The twelve SoftMax/BCE names, in table order.
pub const TABLE_NAMES: [&str; 12] = [
    "soft-0", "soft-d", "soft-u", "soft-n0", "soft-nd", "soft-nu", "bce-0", "bce-d", "bce-u",
    "bce-n0", "bce-nd", "bce-nu",
];

impl LossSpec {
    pub fn new(formula: Formula, family: Family, bias_mode: BiasMode, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidLoss(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if formula == Formula::BceClasswise && bias_mode != BiasMode::Diverse {
            return Err(Error::InvalidLoss(
                "the class-wise BCE family needs one bias per class (diverse mode)".into(),
            ));
        }
        Ok(LossSpec {
            formula,
            family,
            bias_mode,
            gamma,
        })
    }

    /// Parses one of the twelve table names, e.g. `bce-nu`.
    pub fn from_name(name: &str, gamma: f64) -> Result<Self> {
        let unknown = || {
            Error::InvalidLoss(format!(
                "unknown loss '{name}'; valid names: {}",
                TABLE_NAMES.join(", ")
            ))
        };
        let (formula, rest) = name.split_once('-').ok_or_else(unknown)?;
        let formula = match formula {
            "soft" => Formula::Softmax,
            "bce" => Formula::Bce,
            _ => return Err(unknown()),
        };
        let (family, mode) = match rest.strip_prefix('n') {
            Some(m) => (Family::Normalized, m),
            None => (Family::Linear, rest),
        };
        let bias_mode = match mode {
            "0" => BiasMode::Zero,
            "d" => BiasMode::Diverse,
            "u" => BiasMode::Unified,
            _ => return Err(unknown()),
        };
        LossSpec::new(formula, family, bias_mode, gamma)
    }

    /// All twelve table rows at scale `gamma`.
    pub fn table(gamma: f64) -> Vec<LossSpec> {
        TABLE_NAMES
            .iter()
            .map(|n| LossSpec::from_name(n, gamma).expect("table names parse"))
            .collect()
    }

    /// The twelve table rows plus the naive and class-wise forms, in both
    /// families: sixteen specs covering the fourteen distinct loss formulas.
    pub fn all_forms(gamma: f64) -> Vec<LossSpec> {
        let mut v = Self::table(gamma);
        for family in [Family::Linear, Family::Normalized] {
            v.push(LossSpec::new(Formula::Naive, family, BiasMode::Zero, gamma).unwrap());
            v.push(LossSpec::new(Formula::BceClasswise, family, BiasMode::Diverse, gamma).unwrap());
        }
        v
    }

    pub fn formula(&self) -> Formula {
        self.formula
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn bias_mode(&self) -> BiasMode {
        self.bias_mode
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        LossSpec::new(self.formula, self.family, self.bias_mode, gamma)
    }

    pub fn name(&self) -> String {
        let n = if self.family == Family::Normalized {
            "n"
        } else {
            ""
        };
        let mode = match self.bias_mode {
            BiasMode::Zero => "0",
            BiasMode::Diverse => "d",
            BiasMode::Unified => "u",
        };
        match self.formula {
            Formula::Softmax => format!("soft-{n}{mode}"),
            Formula::Bce => format!("bce-{n}{mode}"),
            Formula::Naive => format!("naive{}", if n.is_empty() { "" } else { "-n" }),
            Formula::BceClasswise => format!("bce-{n}di"),
        }
    }

    /// Whether the bias is a trainable parameter under this spec.
    pub fn trains_bias(&self) -> bool {
        self.formula != Formula::Naive && self.bias_mode != BiasMode::Zero
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for LossSpec {
    type Err = Error;

    /// Parses a table name with the default scale `γ = 96`.
    fn from_str(s: &str) -> Result<Self> {
        LossSpec::from_name(s, 96.0)
    }
}

/// Partial derivatives of one sample's loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossGradients {
    pub value: f64,
    /// ∂L/∂c_j with respect to the bias-free metrics.
    pub d_metrics: Vec<f64>,
    /// ∂L/∂b_j. In unified mode every entry holds the derivative with
    /// respect to the single shared bias.
    pub d_bias: Vec<f64>,
    /// ∂L/∂W, indexed like the head's weights (`d_weights[j]` is ∂L/∂W_j).
    pub d_weights: Vec<Vec<f64>>,
    /// ∂L/∂x.
    pub d_feature: Vec<f64>,
}

fn validate(spec: &LossSpec, n: usize, label: usize, bias: &[f64]) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewClasses(n));
    }
    if label >= n {
        return Err(Error::LabelOutOfRange {
            label,
            num_classes: n,
        });
    }
    if bias.len() != n {
        return Err(Error::DimensionMismatch {
            context: "bias vector",
            expected: n,
            actual: bias.len(),
        });
    }
    if spec.formula != Formula::Naive {
        check_bias_mode(bias, spec.bias_mode).map_err(Error::InvalidLoss)?;
    }
    Ok(())
}

/// Value and ∂L/∂c for bias-free metrics `raw`.
fn value_and_metric_grad(
    spec: &LossSpec,
    raw: &[f64],
    label: usize,
    bias: &[f64],
) -> (f64, Vec<f64>) {
    let n = raw.len();
    let sign = spec.family.bias_sign();
    match spec.formula {
        Formula::Naive => {
            let inv = 1.0 / (n as f64 - 1.0);
            let neg: NeumaierSum = raw
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != label)
                .map(|(_, &c)| c)
                .collect();
            let value = -raw[label] + inv * neg.total();
            let grad = (0..n)
                .map(|j| if j == label { -1.0 } else { inv })
                .collect();
            (value, grad)
        }
        Formula::Softmax => {
            let z: Vec<f64> = raw.iter().zip(bias).map(|(c, b)| c + sign * b).collect();
            let value = log_sum_exp(&z) - z[label];
            let mut grad = softmax(&z);
            grad[label] -= 1.0;
            (value, grad)
        }
        Formula::Bce | Formula::BceClasswise => {
            let z: Vec<f64> = match spec.formula {
                Formula::Bce => raw.iter().zip(bias).map(|(c, b)| c + sign * b).collect(),
                _ => raw.iter().map(|c| c + sign * bias[label]).collect(),
            };
            let mut acc = NeumaierSum::default();
            let mut grad = vec![0.0; n];
            for (j, &zj) in z.iter().enumerate() {
                if j == label {
                    acc.add(softplus(-zj));
                    grad[j] = -sigmoid(-zj);
                } else {
                    acc.add(softplus(zj));
                    grad[j] = sigmoid(zj);
                }
            }
            (acc.total(), grad)
        }
    }
}

fn bias_grad(spec: &LossSpec, d_metrics: &[f64], label: usize) -> Vec<f64> {
    let n = d_metrics.len();
    let sign = spec.family.bias_sign();
    if !spec.trains_bias() {
        return vec![0.0; n];
    }
    match (spec.formula, spec.bias_mode) {
        (Formula::BceClasswise, _) => {
            let total: NeumaierSum = d_metrics.iter().copied().collect();
            let mut g = vec![0.0; n];
            g[label] = sign * total.total();
            g
        }
        (_, BiasMode::Unified) => {
            let total: NeumaierSum = d_metrics.iter().copied().collect();
            vec![sign * total.total(); n]
        }
        _ => d_metrics.iter().map(|g| sign * g).collect(),
    }
}

/// Loss of one sample given its bias-free metrics and the head's bias.
pub fn loss_value(spec: &LossSpec, raw_metrics: &[f64], label: usize, bias: &[f64]) -> Result<f64> {
    validate(spec, raw_metrics.len(), label, bias)?;
    Ok(value_and_metric_grad(spec, raw_metrics, label, bias).0)
}

fn check_head(spec: &LossSpec, head: &ClassifierHead) -> Result<()> {
    if spec.family != head.family() {
        return Err(Error::InvalidLoss(format!(
            "loss {} expects the {:?} family, head is {:?}",
            spec.name(),
            spec.family,
            head.family()
        )));
    }
    if spec.formula != Formula::Naive && spec.bias_mode != head.bias_mode() {
        return Err(Error::InvalidLoss(format!(
            "loss {} expects bias mode {:?}, head has {:?}",
            spec.name(),
            spec.bias_mode,
            head.bias_mode()
        )));
    }
    if spec.family == Family::Normalized && spec.gamma != head.gamma() {
        return Err(Error::InvalidLoss(format!(
            "loss gamma {} differs from head gamma {}",
            spec.gamma,
            head.gamma()
        )));
    }
    Ok(())
}

pub(crate) fn gradients_for(
    spec: &LossSpec,
    x: &[f64],
    head: &ClassifierHead,
    label: usize,
) -> Result<LossGradients> {
    check_head(spec, head)?;
    let raw = head.raw_metrics(x)?;
    validate(spec, raw.len(), label, head.bias())?;
    let (value, d_metrics) = value_and_metric_grad(spec, &raw, label, head.bias());
    let d_bias = bias_grad(spec, &d_metrics, label);
    let m = x.len();
    let mut d_weights = vec![vec![0.0; m]; raw.len()];
    let mut d_feature = vec![0.0; m];
    match spec.family {
        Family::Linear => {
            for ((g, w), dw) in d_metrics.iter().zip(head.weights()).zip(&mut d_weights) {
                for k in 0..m {
                    dw[k] = g * x[k];
                    d_feature[k] += g * w[k];
                }
            }
        }
        Family::Normalized => {
            // c_j = γ·(W_j·x)/(|W_j||x|)
            let gamma = head.gamma();
            let xn = norm(x);
            for ((g, w), dw) in d_metrics.iter().zip(head.weights()).zip(&mut d_weights) {
                let wn = norm(w);
                let cos = dot(w, x) / (wn * xn);
                let s = gamma * g;
                for k in 0..m {
                    dw[k] = s * (x[k] / (wn * xn) - cos * w[k] / (wn * wn));
                    d_feature[k] += s * (w[k] / (wn * xn) - cos * x[k] / (xn * xn));
                }
            }
        }
    }
    Ok(LossGradients {
        value,
        d_metrics,
        d_bias,
        d_weights,
        d_feature,
    })
}

/// Exact analytic derivatives of the loss of one sample.
pub fn loss_gradients(
    spec: &LossSpec,
    feature: &FeatureVector,
    head: &ClassifierHead,
    label: usize,
) -> Result<LossGradients> {
    gradients_for(spec, feature.as_slice(), head, label)
}

/// Mean loss over `data`, summed in index order with compensation.
pub fn batch_loss(spec: &LossSpec, head: &ClassifierHead, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    check_head(spec, head)?;
    let mut acc = NeumaierSum::default();
    for (x, &label) in data.features().iter().zip(data.labels()) {
        let raw = head.raw_metrics(x.as_slice())?;
        acc.add(loss_value(spec, &raw, label, head.bias())?);
    }
    Ok(acc.total() / data.len() as f64)
}
