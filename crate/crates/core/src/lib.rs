//! Uniform classification: SoftMax and BCE losses with zero, diverse or
//! unified bias, the sample-wise / class-wise uniform / uniform accuracies
//! with exact optimal-threshold search, the stationary-bias theory of the
//! unified-bias BCE loss, and a small deterministic trainer.

pub mod classifier;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod losses;
pub mod numeric;
pub mod theory;
pub mod trainer;

pub use classifier::{
    compute_metrics, softmax_transform, BiasMode, ClassifierHead, Family, FeatureVector,
    LabeledDataset, MetricBatch,
};
pub use error::{Error, Result};
pub use evaluation::{evaluate, AccuracyReport, DistributionReport};
pub use losses::{batch_loss, loss_gradients, loss_value, Formula, LossGradients, LossSpec};
pub use theory::{corollary_condition, stationary_bias, BoundedMetricModel};
