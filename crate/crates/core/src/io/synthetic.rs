use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classifier::LabeledDataset;
use crate::error::{Error, Result};

const STREAM_CENTERS: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_HOLDOUT: u64 = 2;

/// Isotropic Gaussian clusters around centers on a sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub samples_per_class: usize,
    /// Radius of the sphere the class centers are drawn on.
    pub center_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::TooFewClasses(self.num_classes));
        }
        if self.dim == 0 || self.samples_per_class == 0 {
            return Err(Error::InvalidConfig(
                "dimension and samples per class must be positive".into(),
            ));
        }
        if !(self.center_scale.is_finite() && self.center_scale > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "center scale must be positive, got {}",
                self.center_scale
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Class centers, identical for every dataset drawn from this spec.
    pub fn centers(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(STREAM_CENTERS);
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(self.num_classes);
        while centers.len() < self.num_classes {
            let v: Vec<f64> = (0..self.dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            let c: Vec<f64> = v.iter().map(|x| x / norm * self.center_scale).collect();
            let collides = centers.iter().any(|o| {
                o.iter()
                    .zip(&c)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    < 1e-9
            });
            if !collides {
                centers.push(c);
            }
        }
        Ok(centers)
    }

    fn draw(&self, samples_per_class: usize, stream: u64) -> Result<LabeledDataset> {
        let centers = self.centers()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let noise = Normal::new(0.0, self.noise_sigma).expect("validated sigma");
        let mut rows = Vec::with_capacity(self.num_classes * samples_per_class);
        let mut labels = Vec::with_capacity(rows.capacity());
        for (label, center) in centers.iter().enumerate() {
            for _ in 0..samples_per_class {
                rows.push(center.iter().map(|c| c + noise.sample(&mut rng)).collect());
                labels.push(label);
            }
        }
        LabeledDataset::from_rows(rows, labels, self.num_classes)
    }
}

/// `samples_per_class` samples per class, grouped by class in label order.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.draw(spec.samples_per_class, STREAM_TRAIN)
}

/// Fresh samples around the same centers, independent of the training draw.
pub fn generate_holdout(spec: &SyntheticSpec, samples_per_class: usize) -> Result<LabeledDataset> {
    if samples_per_class == 0 {
        return Err(Error::InvalidConfig(
            "samples per class must be positive".into(),
        ));
    }
    spec.draw(samples_per_class, STREAM_HOLDOUT)
}
