//! Command-line front end. Every subcommand writes its parsed arguments into
//! its report next to the results.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classifier::{compute_metrics, ClassifierHead, LabeledDataset};
use crate::error::{Error, Result};
use crate::evaluation::{
    class_wise_type2_fit, distribution_report, evaluate, uniform_accuracy_at, AccuracyReport,
    ClassWiseFit,
};
use crate::io::{
    generate_holdout, generate_synthetic, load_features_csv, load_report, save_features_csv,
    save_histogram_csv, save_report, SyntheticSpec,
};
use crate::losses::{LossSpec, TABLE_NAMES};
use crate::theory::{
    corollary_condition, numeric_stationary_bias, stationary_bias, BoundedMetricModel,
};
use crate::trainer::{sweep_bias_init, sweep_gamma, train, TrainConfig};

pub const OUT_DIR_ENV: &str = "UNICLS_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "unicls", version, about = "Uniform classification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an extractor and classifier head, then evaluate it
    Train(TrainArgs),
    /// Evaluate a saved head on a feature file
    Evaluate(EvaluateArgs),
    /// Train once per scale factor of a normalized loss
    SweepGamma(SweepGammaArgs),
    /// Train once per bias initialization mode
    SweepBiasInit(SweepBiasInitArgs),
    /// Export positive/negative metric statistics and a histogram
    DistExport(DistExportArgs),
    /// Compare the closed-form stationary bias with numeric minimization
    TheoryCheck(TheoryCheckArgs),
    /// Write a synthetic dataset as feature CSV
    GenData(GenDataArgs),
}

fn parse_loss_name(s: &str) -> std::result::Result<String, String> {
    if TABLE_NAMES.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!(
            "unknown loss '{s}'; valid names: {}",
            TABLE_NAMES.join(", ")
        ))
    }
}

fn parse_bias_mode(s: &str) -> std::result::Result<u8, String> {
    match s.parse::<u8>() {
        Ok(m) if m <= 7 => Ok(m),
        _ => Err(format!(
            "bias init mode must be an integer in 0..=7, got '{s}'"
        )),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SyntheticArgs {
    /// Generate a synthetic dataset instead of reading --features
    #[arg(long)]
    pub synthetic: bool,
    /// Number of classes of the synthetic dataset
    #[arg(long, default_value_t = 16)]
    pub classes: usize,
    /// Feature dimension of the synthetic dataset
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub samples_per_class: usize,
    /// Radius of the sphere holding the class centers
    #[arg(long, default_value_t = 1.0)]
    pub center_scale: f64,
    /// Standard deviation of the isotropic noise
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Held-out samples per class for evaluation (0 evaluates on the training set)
    #[arg(long, default_value_t = 0)]
    pub holdout_per_class: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Feature CSV with header id,label,f0,...
    #[arg(
        long,
        required_unless_present = "synthetic",
        conflicts_with = "synthetic"
    )]
    pub features: Option<PathBuf>,
    /// Feature CSV used for evaluation (defaults to the training data)
    #[arg(long, conflicts_with = "synthetic")]
    pub eval_features: Option<PathBuf>,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainingArgs {
    /// Loss name: {soft,bce}-{0,d,u,n0,nd,nu}
    #[arg(long, default_value = "bce-nu", value_parser = parse_loss_name)]
    pub loss: String,
    /// Scale factor of the normalized classifier
    #[arg(long, default_value_t = 96.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Initial learning rate (cosine decay to zero)
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0.0)]
    pub weight_decay: f64,
    /// Comma-separated hidden widths of the extractor (empty for none)
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub hidden: Vec<usize>,
    /// Bias initialization mode 0..=7
    #[arg(long, default_value = "0", value_parser = parse_bias_mode)]
    pub bias_init: u8,
    /// Seed for data generation, initialization and shuffling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Output directory
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Feature CSV with header id,label,f0,...
    #[arg(long)]
    pub features: PathBuf,
    /// Classifier head JSON
    #[arg(long)]
    pub head: PathBuf,
    /// Evaluate the bias-free metrics instead of the biased ones
    #[arg(long)]
    pub raw: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepGammaArgs {
    /// Comma-separated scale factors
    #[arg(long, value_delimiter = ',', default_value = "1,2,16")]
    pub gammas: Vec<f64>,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepBiasInitArgs {
    /// Comma-separated bias initialization modes
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7", value_parser = parse_bias_mode)]
    pub modes: Vec<u8>,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistExportArgs {
    /// Feature CSV with header id,label,f0,...
    #[arg(long)]
    pub features: PathBuf,
    /// Classifier head JSON
    #[arg(long)]
    pub head: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Use the bias-free metrics instead of the biased ones
    #[arg(long)]
    pub raw: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TheoryCheckArgs {
    /// Comma-separated class counts
    #[arg(long, value_delimiter = ',', required = true)]
    pub classes: Vec<usize>,
    /// Comma-separated scale factors; bounds are [-gamma, gamma]
    #[arg(long, value_delimiter = ',', required = true)]
    pub gamma: Vec<f64>,
    /// Optional directory for a JSON copy of the table
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    result: R,
}

fn write_report<C: Serialize, R: Serialize>(
    out: &Path,
    file: &str,
    command: &str,
    config: &C,
    result: R,
) -> Result<PathBuf> {
    let path = out.join(file);
    let report = Report {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        result,
    };
    save_report(&report, &path)?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

impl SyntheticArgs {
    fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            num_classes: self.classes,
            dim: self.dim,
            samples_per_class: self.samples_per_class,
            center_scale: self.center_scale,
            noise_sigma: self.noise,
            seed,
        }
    }
}

/// Training and evaluation sets plus loader warnings.
fn load_data(data: &DataArgs, seed: u64) -> Result<(LabeledDataset, LabeledDataset, Vec<String>)> {
    if let Some(path) = &data.features {
        let train_set = load_features_csv(path)?;
        let mut warnings = train_set.warnings;
        let eval_set = match &data.eval_features {
            Some(p) => {
                let e = load_features_csv(p)?;
                warnings.extend(e.warnings);
                reshape(e.dataset, train_set.dataset.num_classes())?
            }
            None => train_set.dataset.clone(),
        };
        let n = train_set.dataset.num_classes().max(eval_set.num_classes());
        Ok((
            reshape(train_set.dataset, n)?,
            reshape(eval_set, n)?,
            warnings,
        ))
    } else {
        let spec = data.synthetic.spec(seed);
        let train_set = generate_synthetic(&spec)?;
        let eval_set = match data.synthetic.holdout_per_class {
            0 => train_set.clone(),
            k => generate_holdout(&spec, k)?,
        };
        Ok((train_set, eval_set, Vec::new()))
    }
}

/// Widens the class count of `data` to at least `n` (files may omit the
/// highest classes).
fn reshape(data: LabeledDataset, n: usize) -> Result<LabeledDataset> {
    if data.num_classes() >= n {
        return Ok(data);
    }
    LabeledDataset::new(data.features().to_vec(), data.labels().to_vec(), n)
}

fn train_config(t: &TrainingArgs) -> Result<TrainConfig> {
    let config = TrainConfig {
        loss: LossSpec::from_name(&t.loss, t.gamma)?,
        epochs: t.epochs,
        batch_size: t.batch_size,
        lr0: t.lr,
        momentum: t.momentum,
        weight_decay: t.weight_decay,
        seed: t.seed,
        hidden_dims: t.hidden.clone(),
        bias_init_mode: t.bias_init,
    };
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct TrainResult<'a> {
    warnings: &'a [String],
    final_report: Option<&'a AccuracyReport>,
    learned_bias: &'a [f64],
    learned_threshold: Option<f64>,
    a_uni_at_learned_threshold: Option<f64>,
    loss_curve: &'a [f64],
}

fn run_train(args: &TrainArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = train_config(&args.training)?;
    let (train_set, eval_set, warnings) = load_data(&args.data, args.training.seed)?;
    let run = train(&config, &train_set, &eval_set)?;
    let out = &args.out.out;
    ensure_dir(out)?;
    let learned_threshold = run.final_head.unified_threshold();
    let a_uni_at_learned_threshold = match learned_threshold {
        Some(t) => Some(uniform_accuracy_at(&run.metrics(&eval_set, false)?, t)),
        None => None,
    };
    let result = TrainResult {
        warnings: &warnings,
        final_report: run.final_report(),
        learned_bias: run.final_head.bias(),
        learned_threshold,
        a_uni_at_learned_threshold,
        loss_curve: &run.loss_curve,
    };
    let report = write_report(out, "report.json", "train", args, result)?;
    save_report(&run.final_head, out.join("head.json"))?;
    save_report(&run, out.join("run.json"))?;
    if let Some(r) = run.final_report() {
        writeln!(
            stdout,
            "a_sw={:.4} a_cw={:.4} a_uni={:.4} t_star={:.6}",
            r.a_sw, r.a_cw, r.a_uni, r.t_star
        )
        .ok();
    }
    writeln!(stdout, "report: {}", report.display()).ok();
    Ok(())
}

fn load_head(path: &Path) -> Result<ClassifierHead> {
    load_report(path)
}

fn head_and_features(
    features: &Path,
    head: &Path,
) -> Result<(ClassifierHead, LabeledDataset, Vec<String>)> {
    let head = load_head(head)?;
    let loaded = load_features_csv(features)?;
    if loaded.dataset.num_classes() > head.num_classes() {
        return Err(Error::LabelOutOfRange {
            label: loaded.dataset.num_classes() - 1,
            num_classes: head.num_classes(),
        });
    }
    let data = reshape(loaded.dataset, head.num_classes())?;
    Ok((head, data, loaded.warnings))
}

#[derive(Serialize)]
struct EvaluateResult<'a> {
    warnings: &'a [String],
    report: &'a AccuracyReport,
    type2: &'a ClassWiseFit,
}

fn run_evaluate(args: &EvaluateArgs, stdout: &mut dyn Write) -> Result<()> {
    let (head, data, warnings) = head_and_features(&args.features, &args.head)?;
    let batch = compute_metrics(&head, &data, !args.raw)?;
    let report = evaluate(&batch);
    let type2 = class_wise_type2_fit(&batch);
    ensure_dir(&args.out.out)?;
    let path = write_report(
        &args.out.out,
        "report.json",
        "evaluate",
        args,
        EvaluateResult {
            warnings: &warnings,
            report: &report,
            type2: &type2,
        },
    )?;
    writeln!(
        stdout,
        "a_sw={:.4} a_cw={:.4} a_uni={:.4} t_star={:.6}\nreport: {}",
        report.a_sw,
        report.a_cw,
        report.a_uni,
        report.t_star,
        path.display()
    )
    .ok();
    Ok(())
}

fn run_sweep_gamma(args: &SweepGammaArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = train_config(&args.training)?;
    let (train_set, eval_set, _) = load_data(&args.data, args.training.seed)?;
    let rows = sweep_gamma(&config, &args.gammas, &train_set, &eval_set)?;
    ensure_dir(&args.out.out)?;
    let mut csv =
        String::from("gamma,condition,a_sw,a_cw,a_uni,t_star,learned_threshold,stationary_bias\n");
    for r in &rows {
        let learned = r
            .learned_threshold
            .map_or(String::new(), |t| format!("{t:.16e}"));
        csv.push_str(&format!(
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}\n",
            r.gamma,
            r.condition,
            r.report.a_sw,
            r.report.a_cw,
            r.report.a_uni,
            r.report.t_star,
            learned,
            r.stationary_bias
        ));
        writeln!(
            stdout,
            "gamma={} condition={} a_sw={:.4} a_cw={:.4} a_uni={:.4}",
            r.gamma, r.condition, r.report.a_sw, r.report.a_cw, r.report.a_uni
        )
        .ok();
    }
    write_text(&args.out.out.join("sweep_gamma.csv"), &csv)?;
    write_report(
        &args.out.out,
        "sweep_gamma.json",
        "sweep-gamma",
        args,
        &rows,
    )?;
    Ok(())
}

fn run_sweep_bias_init(args: &SweepBiasInitArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = train_config(&args.training)?;
    let (train_set, eval_set, _) = load_data(&args.data, args.training.seed)?;
    let rows = sweep_bias_init(&config, &args.modes, &train_set, &eval_set)?;
    ensure_dir(&args.out.out)?;
    let mut csv = String::from("mode,a_sw,a_cw,a_uni,t_star\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.mode, r.report.a_sw, r.report.a_cw, r.report.a_uni, r.report.t_star
        ));
        writeln!(
            stdout,
            "mode={} a_sw={:.4} a_cw={:.4} a_uni={:.4}",
            r.mode, r.report.a_sw, r.report.a_cw, r.report.a_uni
        )
        .ok();
    }
    write_text(&args.out.out.join("sweep_bias_init.csv"), &csv)?;
    write_report(
        &args.out.out,
        "sweep_bias_init.json",
        "sweep-bias-init",
        args,
        &rows,
    )?;
    Ok(())
}

fn run_dist_export(args: &DistExportArgs, stdout: &mut dyn Write) -> Result<()> {
    let (head, data, _) = head_and_features(&args.features, &args.head)?;
    let batch = compute_metrics(&head, &data, !args.raw)?;
    let dist = distribution_report(&batch, args.bins)?;
    ensure_dir(&args.out.out)?;
    save_histogram_csv(&dist.histogram, args.out.out.join("histogram.csv"))?;
    let path = write_report(
        &args.out.out,
        "distribution.json",
        "dist-export",
        args,
        &dist,
    )?;
    writeln!(
        stdout,
        "samples_used={} min_pos={:.6} max_neg={:.6} overlap_width={:.6}\nreport: {}",
        dist.num_samples_used,
        dist.min_pos,
        dist.max_neg,
        dist.overlap_width,
        path.display()
    )
    .ok();
    Ok(())
}

#[derive(Serialize)]
struct TheoryRow {
    num_classes: usize,
    gamma: f64,
    condition: bool,
    stationary_bias: f64,
    numeric_bias: f64,
    abs_diff: f64,
}

fn run_theory_check(args: &TheoryCheckArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut rows = Vec::new();
    for &n in &args.classes {
        for &gamma in &args.gamma {
            let model = BoundedMetricModel::normalized(gamma, n)?;
            let b = stationary_bias(&model);
            let numeric = numeric_stationary_bias(&model);
            rows.push(TheoryRow {
                num_classes: n,
                gamma,
                condition: corollary_condition(&model),
                stationary_bias: b,
                numeric_bias: numeric,
                abs_diff: (b - numeric).abs(),
            });
        }
    }
    for r in &rows {
        writeln!(
            stdout,
            "N={} gamma={} condition={} b={:.12} numeric_b={:.12} abs_diff={:.3e}",
            r.num_classes, r.gamma, r.condition, r.stationary_bias, r.numeric_bias, r.abs_diff
        )
        .ok();
    }
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_report(out, "theory.json", "theory-check", args, &rows)?;
    }
    Ok(())
}

fn run_gen_data(args: &GenDataArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = args.synthetic.spec(args.seed);
    let data = generate_synthetic(&spec)?;
    ensure_dir(&args.out.out)?;
    save_features_csv(&data, args.out.out.join("features.csv"))?;
    if args.synthetic.holdout_per_class > 0 {
        let hold = generate_holdout(&spec, args.synthetic.holdout_per_class)?;
        save_features_csv(&hold, args.out.out.join("holdout.csv"))?;
    }
    write_report(&args.out.out, "spec.json", "gen-data", args, &spec)?;
    writeln!(
        stdout,
        "samples={} classes={} dim={}",
        data.len(),
        data.num_classes(),
        data.dim()
    )
    .ok();
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn execute(command: &Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Train(a) => run_train(a, stdout),
        Command::Evaluate(a) => run_evaluate(a, stdout),
        Command::SweepGamma(a) => run_sweep_gamma(a, stdout),
        Command::SweepBiasInit(a) => run_sweep_bias_init(a, stdout),
        Command::DistExport(a) => run_dist_export(a, stdout),
        Command::TheoryCheck(a) => run_theory_check(a, stdout),
        Command::GenData(a) => run_gen_data(a, stdout),
    }
}

/// Parses `argv` and runs it. Returns the process exit code: 0 on success,
/// 2 on a usage error, 1 on a runtime error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            e.print().ok();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn loss_names_are_validated() {
        let err = Cli::try_parse_from([
            "unicls",
            "train",
            "--loss",
            "bce-x",
            "--synthetic",
            "--out",
            "o",
        ])
        .unwrap_err();
        let text = err.to_string();
        for name in TABLE_NAMES {
            assert!(text.contains(name), "{text}");
        }
    }

    #[test]
    fn data_source_is_required() {
        assert!(Cli::try_parse_from(["unicls", "train", "--out", "o"]).is_err());
        assert!(Cli::try_parse_from([
            "unicls",
            "train",
            "--out",
            "o",
            "--synthetic",
            "--features",
            "f.csv"
        ])
        .is_err());
    }

    #[test]
    fn hidden_widths_parse() {
        let cli = Cli::try_parse_from([
            "unicls",
            "train",
            "--synthetic",
            "--out",
            "o",
            "--hidden",
            "8,4",
        ])
        .unwrap();
        match cli.command {
            Command::Train(a) => assert_eq!(a.training.hidden, vec![8, 4]),
            _ => unreachable!(),
        }
    }
}
