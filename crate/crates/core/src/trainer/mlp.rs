use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifier::LabeledDataset;
use crate::error::{Error, Result};

/// Affine layer, `weights` row-major with shape `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn he<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("positive std");
        Layer {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| normal.sample(rng)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn zeros_like(&self) -> Self {
        Layer {
            inputs: self.inputs,
            outputs: self.outputs,
            weights: vec![0.0; self.weights.len()],
            bias: vec![0.0; self.bias.len()],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// Feature extractor: affine layers with a rectifier after every layer but
/// the last, so the embedding itself is signed. No layers means identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    input_dim: usize,
    layers: Vec<Layer>,
}

/// Per-layer activations kept for the backward pass.
pub(crate) struct Trace {
    activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("input is always recorded")
    }
}

impl Mlp {
    pub fn new<R: Rng>(input_dim: usize, hidden_dims: &[usize], rng: &mut R) -> Result<Self> {
        if input_dim == 0 || hidden_dims.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        let mut layers = Vec::with_capacity(hidden_dims.len());
        let mut fan_in = input_dim;
        for &width in hidden_dims {
            layers.push(Layer::he(fan_in, width, rng));
            fan_in = width;
        }
        Ok(Mlp { input_dim, layers })
    }

    pub fn identity(input_dim: usize) -> Self {
        Mlp {
            input_dim,
            layers: Vec::new(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, |l| l.outputs)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Trace {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let last = self.layers.len().saturating_sub(1);
        for (k, layer) in self.layers.iter().enumerate() {
            let mut out = layer.forward(activations.last().unwrap());
            if k < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            activations.push(out);
        }
        Trace { activations }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.trace(x).activations.pop().unwrap()
    }

    /// Runs every sample of `data` through the extractor.
    pub fn embed(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        if data.dim() != self.input_dim && !data.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "extractor input",
                expected: self.input_dim,
                actual: data.dim(),
            });
        }
        let rows = data
            .features()
            .iter()
            .map(|f| self.forward(f.as_slice()))
            .collect();
        LabeledDataset::from_rows(rows, data.labels().to_vec(), data.num_classes())
    }

    pub(crate) fn zero_grad(&self) -> Vec<Layer> {
        self.layers.iter().map(Layer::zeros_like).collect()
    }

    /// Adds ∂L/∂θ for one sample into `grads`, given ∂L/∂(output).
    pub(crate) fn backward(&self, trace: &Trace, d_output: &[f64], grads: &mut [Layer]) {
        let mut delta = d_output.to_vec();
        let last = self.layers.len().saturating_sub(1);
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            if k < last {
                let out = &trace.activations[k + 1];
                delta.iter_mut().zip(out).for_each(|(d, &o)| {
                    if o <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            let input = &trace.activations[k];
            let g = &mut grads[k];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(w, &v)| *w += d * v);
            }
            if k > 0 {
                let mut next = vec![0.0; layer.inputs];
                for (row, &d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                    next.iter_mut().zip(row).for_each(|(n, &w)| *n += d * w);
                }
                delta = next;
            }
        }
    }

    /// Flat views of every parameter, in a fixed order.
    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

pub(crate) fn flatten(grads: &[Layer]) -> impl Iterator<Item = f64> + '_ {
    grads
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
}
