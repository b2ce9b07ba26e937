//! Deterministic mini-batch training of a small perceptron extractor and a
//! classifier head under any of the loss forms.

mod bias_init;
mod mlp;
mod sweep;

pub use bias_init::init_bias;
pub use mlp::{Layer, Mlp};
pub use sweep::{sweep_bias_init, sweep_gamma, BiasInitRow, GammaRow};

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifier::{compute_metrics, BiasMode, ClassifierHead, LabeledDataset, MetricBatch};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, AccuracyReport};
use crate::losses::{gradients_for, LossSpec};
use crate::numeric::NeumaierSum;

const STREAM_EXTRACTOR: u64 = 1;
const STREAM_HEAD: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;

/// Learning rate at `epoch` under cosine decay from `lr0` to zero.
pub fn cosine_lr(epoch: usize, total_epochs: usize, lr0: f64) -> f64 {
    if total_epochs == 0 {
        return lr0;
    }
    lr0 * 0.5 * (1.0 + (std::f64::consts::PI * epoch as f64 / total_epochs as f64).cos())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossSpec,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Extractor widths; empty trains the head on the raw features.
    pub hidden_dims: Vec<usize>,
    pub bias_init_mode: u8,
}

impl TrainConfig {
    pub fn new(loss: LossSpec) -> Self {
        TrainConfig {
            loss,
            epochs: 50,
            batch_size: 64,
            lr0: 0.05,
            momentum: 0.9,
            weight_decay: 0.0,
            seed: 0,
            hidden_dims: Vec::new(),
            bias_init_mode: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.lr0
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.bias_init_mode > 7 {
            return Err(Error::UnknownBiasInit(self.bias_init_mode));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden widths must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub config: TrainConfig,
    pub final_head: ClassifierHead,
    pub final_extractor: Mlp,
    /// Mean training loss of each epoch.
    pub loss_curve: Vec<f64>,
    /// Evaluation on the biased metrics after each epoch.
    pub eval_history: Vec<AccuracyReport>,
    /// Bias after each epoch.
    pub learned_bias_trace: Vec<Vec<f64>>,
}

impl TrainRun {
    /// Metrics of `data` under the final extractor and head.
    pub fn metrics(&self, data: &LabeledDataset, include_bias: bool) -> Result<MetricBatch> {
        compute_metrics(
            &self.final_head,
            &self.final_extractor.embed(data)?,
            include_bias,
        )
    }

    pub fn final_report(&self) -> Option<&AccuracyReport> {
        self.eval_history.last()
    }
}

/// Initial extractor and head for `config` on `input_dim`-dimensional data.
pub fn initialize(
    config: &TrainConfig,
    input_dim: usize,
    num_classes: usize,
) -> Result<(Mlp, ClassifierHead)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_EXTRACTOR);
    let extractor = Mlp::new(input_dim, &config.hidden_dims, &mut rng)?;

    let m = extractor.output_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_HEAD);
    let normal = Normal::new(0.0, 1.0 / (m as f64).sqrt()).expect("positive std");
    let weights: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| (0..m).map(|_| normal.sample(&mut rng)).collect())
        .collect();

    let spec = &config.loss;
    let modes = init_bias(config.bias_init_mode, num_classes, config.seed)?;
    let bias = match spec.bias_mode() {
        BiasMode::Zero => vec![0.0; num_classes],
        BiasMode::Diverse => modes,
        BiasMode::Unified => {
            let mean: NeumaierSum = modes.iter().copied().collect();
            vec![mean.total() / num_classes as f64; num_classes]
        }
    };
    let head = ClassifierHead::new(weights, bias, spec.bias_mode(), spec.family(), spec.gamma())?;
    Ok((extractor, head))
}

struct Velocity {
    extractor: Vec<f64>,
    head: Vec<f64>,
    bias: Vec<f64>,
}

/// Trains on `data` and evaluates on `eval_data` after every epoch.
pub fn train(
    config: &TrainConfig,
    data: &LabeledDataset,
    eval_data: &LabeledDataset,
) -> Result<TrainRun> {
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if eval_data.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    if eval_data.dim() != data.dim() || eval_data.num_classes() != data.num_classes() {
        return Err(Error::InvalidConfig(format!(
            "evaluation set shape ({} classes, dim {}) differs from training set ({} classes, dim {})",
            eval_data.num_classes(),
            eval_data.dim(),
            data.num_classes(),
            data.dim()
        )));
    }
    let (mut extractor, mut head) = initialize(config, data.dim(), data.num_classes())?;
    let spec = config.loss;
    let n = head.num_classes();
    let m = head.dim();
    let mut velocity = Velocity {
        extractor: vec![0.0; extractor.num_params()],
        head: vec![0.0; n * m],
        bias: vec![0.0; n],
    };
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(STREAM_SHUFFLE);
    let mut order: Vec<usize> = (0..data.len()).collect();

    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut eval_history = Vec::with_capacity(config.epochs);
    let mut learned_bias_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = cosine_lr(epoch, config.epochs, config.lr0);
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = NeumaierSum::default();
        for (batch_index, batch) in order.chunks(config.batch_size).enumerate() {
            let mut g_extractor = extractor.zero_grad();
            let mut g_head = vec![vec![0.0; m]; n];
            let mut g_bias = vec![0.0; n];
            let mut batch_loss = NeumaierSum::default();
            for &s in batch {
                let (x, label) = data.sample(s);
                let trace = extractor.trace(x.as_slice());
                let g = gradients_for(&spec, trace.output(), &head, label)?;
                if !g.value.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        batch: batch_index,
                    });
                }
                batch_loss.add(g.value);
                for (acc, dw) in g_head.iter_mut().zip(&g.d_weights) {
                    acc.iter_mut().zip(dw).for_each(|(a, d)| *a += d);
                }
                g_bias.iter_mut().zip(&g.d_bias).for_each(|(a, d)| *a += d);
                extractor.backward(&trace, &g.d_feature, &mut g_extractor);
            }
            epoch_loss.add(batch_loss.total());
            let scale = 1.0 / batch.len() as f64;
            let decay = config.weight_decay;
            let mu = config.momentum;

            for ((p, g), v) in extractor
                .params_mut()
                .zip(mlp::flatten(&g_extractor))
                .zip(&mut velocity.extractor)
            {
                *v = mu * *v + g * scale + decay * *p;
                *p -= lr * *v;
            }
            for ((p, g), v) in head
                .weights_mut()
                .iter_mut()
                .flatten()
                .zip(g_head.iter().flatten())
                .zip(&mut velocity.head)
            {
                *v = mu * *v + g * scale + decay * *p;
                *p -= lr * *v;
            }
            if spec.trains_bias() {
                let step: Vec<f64> = velocity
                    .bias
                    .iter_mut()
                    .zip(&g_bias)
                    .map(|(v, g)| {
                        *v = mu * *v + g * scale;
                        lr * *v
                    })
                    .collect();
                head.apply_bias_step(&step);
            }
            let finite = extractor.is_finite()
                && head
                    .weights()
                    .iter()
                    .flatten()
                    .chain(head.bias())
                    .all(|v| v.is_finite());
            if !finite {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_index,
                });
            }
        }
        let mean_loss = epoch_loss.total() / data.len() as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                batch: data.len().div_ceil(config.batch_size) - 1,
            });
        }
        loss_curve.push(mean_loss);
        let batch = compute_metrics(&head, &extractor.embed(eval_data)?, true)?;
        eval_history.push(evaluate(&batch));
        learned_bias_trace.push(head.bias().to_vec());
    }

    Ok(TrainRun {
        config: config.clone(),
        final_head: head,
        final_extractor: extractor,
        loss_curve,
        eval_history,
        learned_bias_trace,
    })
}
