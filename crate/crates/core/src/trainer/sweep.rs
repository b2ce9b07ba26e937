use std::thread;

use serde::{Deserialize, Serialize};

use super::{train, TrainConfig, TrainRun};
use crate::classifier::{Family, LabeledDataset};
use crate::error::{Error, Result};
use crate::evaluation::{uniform_accuracy_at, AccuracyReport};
use crate::theory::{corollary_condition, stationary_bias, BoundedMetricModel};

/// One point of a scale sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub gamma: f64,
    pub report: AccuracyReport,
    /// Threshold implied by the learned unified bias, on bias-free metrics.
    pub learned_threshold: Option<f64>,
    /// Uniform accuracy on the evaluation set at `learned_threshold`.
    pub a_uni_at_learned: Option<f64>,
    pub condition: bool,
    pub stationary_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasInitRow {
    pub mode: u8,
    pub report: AccuracyReport,
    pub final_bias: Vec<f64>,
}

/// Runs `configs` on worker threads and returns results in input order.
fn run_all(
    configs: Vec<TrainConfig>,
    data: &LabeledDataset,
    eval_data: &LabeledDataset,
) -> Result<Vec<TrainRun>> {
    thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || train(c, data, eval_data)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    })
}

fn last_report(run: &TrainRun) -> Result<AccuracyReport> {
    run.final_report()
        .cloned()
        .ok_or_else(|| Error::InvalidConfig("sweeps need at least one epoch".into()))
}

/// Trains once per scale in `gammas` (normalized family only).
pub fn sweep_gamma(
    template: &TrainConfig,
    gammas: &[f64],
    data: &LabeledDataset,
    eval_data: &LabeledDataset,
) -> Result<Vec<GammaRow>> {
    if template.loss.family() != Family::Normalized {
        return Err(Error::InvalidConfig(format!(
            "a scale sweep needs a normalized loss, got {}",
            template.loss
        )));
    }
    let configs = gammas
        .iter()
        .map(|&g| {
            let mut c = template.clone();
            c.loss = c.loss.with_gamma(g)?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let runs = run_all(configs, data, eval_data)?;
    let n = data.num_classes();
    gammas
        .iter()
        .zip(&runs)
        .map(|(&gamma, run)| {
            let model = BoundedMetricModel::normalized(gamma, n)?;
            let learned_threshold = run.final_head.unified_threshold();
            let a_uni_at_learned = match learned_threshold {
                Some(t) => Some(uniform_accuracy_at(&run.metrics(eval_data, false)?, t)),
                None => None,
            };
            Ok(GammaRow {
                gamma,
                report: last_report(run)?,
                learned_threshold,
                a_uni_at_learned,
                condition: corollary_condition(&model),
                stationary_bias: stationary_bias(&model),
            })
        })
        .collect()
}

/// Trains once per bias initialization mode.
pub fn sweep_bias_init(
    template: &TrainConfig,
    modes: &[u8],
    data: &LabeledDataset,
    eval_data: &LabeledDataset,
) -> Result<Vec<BiasInitRow>> {
    let configs = modes
        .iter()
        .map(|&mode| {
            let mut c = template.clone();
            c.bias_init_mode = mode;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let runs = run_all(configs, data, eval_data)?;
    modes
        .iter()
        .zip(&runs)
        .map(|(&mode, run)| {
            Ok(BiasInitRow {
                mode,
                report: last_report(run)?,
                final_bias: run.final_head.bias().to_vec(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LossSpec;

    fn data() -> LabeledDataset {
        let rows = (0..30)
            .map(|k| {
                let c = k % 3;
                let a = c as f64 * 2.1 + (k as f64 * 0.3).sin() * 0.2;
                vec![a.cos(), a.sin()]
            })
            .collect();
        LabeledDataset::from_rows(rows, (0..30).map(|k| k % 3).collect(), 3).unwrap()
    }

    fn template(name: &str) -> TrainConfig {
        let mut c = TrainConfig::new(LossSpec::from_name(name, 8.0).unwrap());
        c.epochs = 3;
        c.batch_size = 10;
        c
    }

    #[test]
    fn one_row_per_gamma_in_order() {
        let d = data();
        let rows = sweep_gamma(&template("bce-nu"), &[1.0, 2.0, 16.0], &d, &d).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.gamma).collect::<Vec<_>>(),
            vec![1.0, 2.0, 16.0]
        );
        assert!(rows.iter().all(|r| r.learned_threshold.is_some()));
        // 2N − 3 = 3 against e^2, e^4, e^32
        assert!(rows.iter().all(|r| r.condition));
    }

    #[test]
    fn gamma_sweep_requires_normalized_loss() {
        let d = data();
        assert!(sweep_gamma(&template("bce-u"), &[1.0], &d, &d).is_err());
    }

    #[test]
    fn bias_init_sweep() {
        let d = data();
        let rows = sweep_bias_init(&template("bce-nd"), &[0, 4, 7], &d, &d).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].mode, 4);
        assert!(sweep_bias_init(&template("bce-nd"), &[9], &d, &d).is_err());
    }
}
