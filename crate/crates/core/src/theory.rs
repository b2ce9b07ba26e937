//! Stationary point of the unified bias under perfectly separated metrics,
//! and the arithmetic/geometric-mean bounds relating the naive loss to the
//! SoftMax and BCE forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, sigmoid, softplus, NeumaierSum};

/// Metrics confined to `[lower, upper]`, with every positive at `upper` and
/// every negative at `lower`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedMetricModel {
    lower: f64,
    upper: f64,
    num_classes: usize,
}

impl BoundedMetricModel {
    pub fn new(lower: f64, upper: f64, num_classes: usize) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::NonFinite("metric bounds"));
        }
        if upper <= lower {
            return Err(Error::InvalidConfig(format!(
                "upper bound {upper} must exceed lower bound {lower}"
            )));
        }
        if num_classes < 2 {
            return Err(Error::TooFewClasses(num_classes));
        }
        Ok(BoundedMetricModel {
            lower,
            upper,
            num_classes,
        })
    }

    /// Cosine metrics scaled by `gamma` live in `[-gamma, gamma]`.
    pub fn normalized(gamma: f64, num_classes: usize) -> Result<Self> {
        if gamma.is_nan() || gamma <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Self::new(-gamma, gamma, num_classes)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Unified-bias BCE loss of one sample as a function of the bias `b`
    /// (normalized sign convention, metrics shifted by `-b`).
    pub fn loss_at(&self, b: f64) -> f64 {
        softplus(b - self.upper) + (self.num_classes - 1) as f64 * softplus(self.lower - b)
    }

    fn loss_slope(&self, b: f64) -> f64 {
        sigmoid(b - self.upper) - (self.num_classes - 1) as f64 * sigmoid(self.lower - b)
    }
}

/// Closed-form minimizer of [`BoundedMetricModel::loss_at`].
///
/// The root of `u² − (N−2)e^A u − (N−1)e^{A+B} = 0` in `u = e^b`, with
/// `e^{(A+B)/2}` factored out so that nothing overflows for any gap `B − A`.
pub fn stationary_bias(model: &BoundedMetricModel) -> f64 {
    let n = model.num_classes as f64;
    let half_gap = 0.5 * (model.upper - model.lower);
    let lead = (n - 2.0) * (-half_gap).exp();
    let root = (lead * lead + 4.0 * (n - 1.0)).sqrt();
    model.lower + half_gap + (0.5 * (lead + root)).ln()
}

/// `2 ≤ N < (e^{B−A} + 3) / 2`, the condition under which the stationary
/// bias falls strictly between the bounds.
pub fn corollary_condition(model: &BoundedMetricModel) -> bool {
    let holds = ((2 * model.num_classes - 3) as f64) < (model.upper - model.lower).exp();
    if holds {
        let b = stationary_bias(model);
        assert!(
            model.lower < b && b < model.upper,
            "stationary bias {b} outside ({}, {})",
            model.lower,
            model.upper
        );
    }
    holds
}

/// Root of the loss slope by bisection. The slope is increasing in `b`, so
/// this needs nothing but sign evaluations.
pub fn numeric_stationary_bias(model: &BoundedMetricModel) -> f64 {
    let span = model.upper - model.lower + 1.0;
    let mut lo = model.lower - span;
    let mut hi = model.upper + (model.num_classes as f64).ln() + span;
    while model.loss_slope(lo) > 0.0 {
        lo -= 2.0 * (hi - lo);
    }
    while model.loss_slope(hi) < 0.0 {
        hi += 2.0 * (hi - lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if model.loss_slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One bound: `slack = rhs − lhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

impl Slack {
    pub const TOLERANCE: f64 = -1e-9;

    fn new(lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        Slack {
            lhs,
            rhs,
            slack,
            holds: slack >= Self::TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmGmReport {
    pub naive_loss: f64,
    /// Scaled SoftMax loss.
    pub softmax: Slack,
    /// Single log term on the mean negative.
    pub mean_negative: Slack,
    /// Average of per-negative BCE terms.
    pub per_negative: Slack,
    /// Summed bound over one sample per class, when a tuple is given.
    pub tuple_sum: Option<Slack>,
}

impl AmGmReport {
    pub fn all_hold(&self) -> bool {
        self.softmax.holds
            && self.mean_negative.holds
            && self.per_negative.holds
            && self.tuple_sum.is_none_or(|s| s.holds)
    }
}

/// `−c_i + mean_{j≠i} c_j`.
pub fn naive_loss(metrics: &[f64], label: usize) -> f64 {
    let n = metrics.len();
    let negatives: NeumaierSum = metrics
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label)
        .map(|(_, &c)| c)
        .collect();
    -metrics[label] + negatives.total() / (n - 1) as f64
}

fn validate(metrics: &[f64], label: usize) -> Result<()> {
    if metrics.len() < 2 {
        return Err(Error::TooFewClasses(metrics.len()));
    }
    if label >= metrics.len() {
        return Err(Error::LabelOutOfRange {
            label,
            num_classes: metrics.len(),
        });
    }
    if metrics.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("metrics"));
    }
    Ok(())
}

/// Evaluates the four bounds on the naive loss of `metrics` (true class
/// `label`). `tuple[i][j] = c_j(x^(i))` for one sample `x^(i)` of each class
/// `i` enables the summed bound.
pub fn check_amgm_inequalities(
    metrics: &[f64],
    label: usize,
    tuple: Option<&[Vec<f64>]>,
) -> Result<AmGmReport> {
    validate(metrics, label)?;
    let n = metrics.len();
    let nf = n as f64;
    let ln2 = std::f64::consts::LN_2;
    let ci = metrics[label];
    let naive = naive_loss(metrics, label);

    let soft = log_sum_exp(metrics) - ci;
    let softmax = Slack::new(naive, nf / (nf - 1.0) * soft - nf * nf.ln() / (nf - 1.0));

    let mean_neg = naive + ci;
    let mean_negative = Slack::new(naive, 2.0 * softplus(mean_neg - ci) - 2.0 * ln2);

    let terms: NeumaierSum = (0..n)
        .filter(|&j| j != label)
        .map(|j| softplus(metrics[j] - ci))
        .collect();
    let per_negative = Slack::new(naive, 2.0 / (nf - 1.0) * terms.total() - 2.0 * ln2);

    let tuple_sum = match tuple {
        None => None,
        Some(rows) => {
            if rows.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "metric tuple rows",
                    expected: n,
                    actual: rows.len(),
                });
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::DimensionMismatch {
                        context: "metric tuple row",
                        expected: n,
                        actual: row.len(),
                    });
                }
                validate(row, i)?;
            }
            let lhs: NeumaierSum = (0..n).map(|i| naive_loss(&rows[i], i)).collect();
            let mut acc = NeumaierSum::default();
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    acc.add(softplus(rows[i][j] - rows[j][j]));
                }
            }
            Some(Slack::new(
                lhs.total(),
                2.0 / (nf - 1.0) * acc.total() - 2.0 * nf * ln2,
            ))
        }
    };

    let report = AmGmReport {
        naive_loss: naive,
        softmax,
        mean_negative,
        per_negative,
        tuple_sum,
    };
    assert!(
        report.all_hold(),
        "bound violated beyond rounding: {report:?}"
    );
    Ok(report)
}
