//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use unicls::evaluation::{
    class_wise_fit, class_wise_type2_accuracy, class_wise_type2_fit, class_wise_uniform_accuracy,
    metric_matrix, sample_wise_accuracy, uniform_count_at, uniform_fit_batch,
};
use unicls::io::{generate_holdout, generate_synthetic, SyntheticSpec};
use unicls::theory::{
    check_amgm_inequalities, corollary_condition, stationary_bias, BoundedMetricModel,
};
use unicls::trainer::{train, TrainConfig, TrainRun};
use unicls::{
    evaluate, loss_gradients, softmax_transform, BiasMode, ClassifierHead, Family, FeatureVector,
    Formula, LossSpec, MetricBatch,
};

// Tolerances and budgets.
const GRAD_STEP: f64 = 1e-5;
const GRAD_REL_TOL: f64 = 1e-5;
const GRAD_FLOOR: f64 = 1e-4;
const GRAD_CONFIGS: usize = 100;
const BIAS_TOL: f64 = 1e-6;
const SLACK_TOL: f64 = -1e-9;
const EQUALITY_TOL: f64 = 1e-9;
const AMGM_SAMPLES: usize = 10_000;
const SWEEP_GRID: usize = 100_000;
const TREND_MIN_UNI_GAP: f64 = 10.0;
const TREND_MAX_SW_DIFF: f64 = 3.0;
const COLLAPSE_MAX_SW: f64 = 5.0;
const HEALTHY_MIN_SW: f64 = 90.0;

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

fn random_batch(r: &mut ChaCha8Rng, n: usize, samples: usize, lattice: bool) -> MetricBatch {
    let mut values = Vec::with_capacity(n * samples);
    let mut labels = Vec::with_capacity(samples);
    for _ in 0..samples {
        let label = r.random_range(0..n);
        for j in 0..n {
            let v = if lattice {
                r.random_range(-50i32..=50) as f64 / 100.0
            } else {
                normal(r) + if j == label { 1.0 } else { 0.0 }
            };
            values.push(v);
        }
        labels.push(label);
    }
    MetricBatch::from_flat(values, labels, n, true).unwrap()
}

fn hierarchy_ok(run: &TrainRun) -> bool {
    run.eval_history
        .iter()
        .all(|r| r.uni_count <= r.cw_count && r.cw_count <= r.sw_count)
}

fn criterion_1() -> Outcome {
    let mut r = rng(1);
    let mut violations = 0;
    for _ in 0..1000 {
        let n = r.random_range(2..=10);
        let samples = r.random_range(1..=200);
        let lattice = r.random_bool(0.3);
        let batch = random_batch(&mut r, n, samples, lattice);
        let (_, mask) = sample_wise_accuracy(&batch);
        let sw = mask.iter().filter(|&&c| c).count();
        let cw = class_wise_fit(&batch).count;
        let uni = uniform_fit_batch(&batch).count;
        if !(uni <= cw && cw <= sw) {
            violations += 1;
        }
    }
    let spec = SyntheticSpec {
        num_classes: 5,
        dim: 8,
        samples_per_class: 20,
        center_scale: 1.0,
        noise_sigma: 0.4,
        seed: 1,
    };
    let data = generate_synthetic(&spec).unwrap();
    let mut epochs_checked = 0;
    for name in unicls::losses::TABLE_NAMES {
        let mut config = TrainConfig::new(LossSpec::from_name(name, 16.0).unwrap());
        config.epochs = 5;
        config.lr0 = 0.02;
        config.hidden_dims = vec![16];
        let run = train(&config, &data, &data).unwrap();
        epochs_checked += run.eval_history.len();
        if !hierarchy_ok(&run) {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!(
            "1000 random batches and {epochs_checked} training epochs, {violations} violations"
        ),
    )
}

/// Loss recomputed from scratch for the finite-difference oracle.
fn oracle_loss(
    spec: &LossSpec,
    weights: &[Vec<f64>],
    bias: &[f64],
    x: &[f64],
    label: usize,
) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let len = |a: &[f64]| dot(a, a).sqrt();
    let (sign, c): (f64, Vec<f64>) = match spec.family() {
        Family::Linear => (1.0, weights.iter().map(|w| dot(w, x)).collect()),
        Family::Normalized => (
            -1.0,
            weights
                .iter()
                .map(|w| spec.gamma() * dot(w, x) / (len(w) * len(x)))
                .collect(),
        ),
    };
    let n = c.len();
    let ln1pexp = |z: f64| {
        if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        }
    };
    let bce = |z: &[f64]| -> f64 {
        (0..n)
            .map(|j| {
                if j == label {
                    ln1pexp(-z[j])
                } else {
                    ln1pexp(z[j])
                }
            })
            .sum()
    };
    match spec.formula() {
        Formula::Naive => {
            -c[label] + (0..n).filter(|&j| j != label).map(|j| c[j]).sum::<f64>() / (n - 1) as f64
        }
        Formula::Softmax => {
            let z: Vec<f64> = (0..n).map(|j| c[j] + sign * bias[j]).collect();
            z.iter().map(|v| v.exp()).sum::<f64>().ln() - z[label]
        }
        Formula::Bce => bce(&(0..n).map(|j| c[j] + sign * bias[j]).collect::<Vec<_>>()),
        Formula::BceClasswise => bce(&(0..n)
            .map(|j| c[j] + sign * bias[label])
            .collect::<Vec<_>>()),
    }
}

/// Group-wise relative error `max|a−n| / max(max|a|, max|n|, GRAD_FLOOR)`.
/// The floor keeps gradients that vanish analytically (a shared bias under
/// SoftMax) from dividing rounding noise by rounding noise.
fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = analytic
        .iter()
        .chain(numeric)
        .map(|v| v.abs())
        .fold(GRAD_FLOOR, f64::max);
    diff / scale
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let mut worst = (0.0f64, String::new());
    let h = GRAD_STEP;
    let forms = LossSpec::all_forms(1.0);
    for form in &forms {
        for _ in 0..GRAD_CONFIGS {
            let n = r.random_range(2..=8);
            let m = r.random_range(2..=8);
            let gamma = r.random_range(0.5..8.0);
            let spec = form.with_gamma(gamma).unwrap();
            let weights: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| normal(&mut r)).collect())
                .collect();
            let mode = if spec.formula() == Formula::Naive {
                BiasMode::Zero
            } else {
                spec.bias_mode()
            };
            let bias: Vec<f64> = match mode {
                BiasMode::Zero => vec![0.0; n],
                BiasMode::Diverse => (0..n).map(|_| normal(&mut r)).collect(),
                BiasMode::Unified => vec![normal(&mut r); n],
            };
            let x: Vec<f64> = (0..m).map(|_| normal(&mut r)).collect();
            let label = r.random_range(0..n);
            let head =
                ClassifierHead::new(weights.clone(), bias.clone(), mode, spec.family(), gamma)
                    .unwrap();
            let g = loss_gradients(&spec, &FeatureVector::new(x.clone()).unwrap(), &head, label)
                .unwrap();
            let f = |w: &[Vec<f64>], b: &[f64], xx: &[f64]| oracle_loss(&spec, w, b, xx, label);

            let mut num_w = Vec::new();
            let mut ana_w = Vec::new();
            for j in 0..n {
                for k in 0..m {
                    let mut wp = weights.clone();
                    let mut wm = weights.clone();
                    wp[j][k] += h;
                    wm[j][k] -= h;
                    num_w.push((f(&wp, &bias, &x) - f(&wm, &bias, &x)) / (2.0 * h));
                    ana_w.push(g.d_weights[j][k]);
                }
            }
            let num_x: Vec<f64> = (0..m)
                .map(|k| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    (f(&weights, &bias, &xp) - f(&weights, &bias, &xm)) / (2.0 * h)
                })
                .collect();
            let (num_b, ana_b): (Vec<f64>, Vec<f64>) = if !spec.trains_bias() {
                (vec![0.0; n], g.d_bias.clone())
            } else if mode == BiasMode::Unified {
                let bp: Vec<f64> = bias.iter().map(|b| b + h).collect();
                let bm: Vec<f64> = bias.iter().map(|b| b - h).collect();
                let d = (f(&weights, &bp, &x) - f(&weights, &bm, &x)) / (2.0 * h);
                if g.d_bias.iter().any(|&v| v != g.d_bias[0]) {
                    return outcome(
                        false,
                        format!("{}: unified bias gradient not shared", spec.name()),
                    );
                }
                (vec![d], vec![g.d_bias[0]])
            } else {
                let num = (0..n)
                    .map(|j| {
                        let mut bp = bias.clone();
                        let mut bm = bias.clone();
                        bp[j] += h;
                        bm[j] -= h;
                        (f(&weights, &bp, &x) - f(&weights, &bm, &x)) / (2.0 * h)
                    })
                    .collect();
                (num, g.d_bias.clone())
            };
            for (what, e) in [
                ("weights", rel_err(&ana_w, &num_w)),
                ("bias", rel_err(&ana_b, &num_b)),
                ("feature", rel_err(&g.d_feature, &num_x)),
            ] {
                if e > worst.0 || e.is_nan() {
                    worst = (e, format!("{} {what}", spec.name()));
                }
            }
            let v = oracle_loss(&spec, &weights, &bias, &x, label);
            if (v - g.value).abs() > 1e-9 * v.abs().max(1.0) {
                return outcome(
                    false,
                    format!("{}: value {} vs oracle {v}", spec.name(), g.value),
                );
            }
        }
    }
    outcome(
        worst.0 <= GRAD_REL_TOL,
        format!(
            "{} forms x {GRAD_CONFIGS} configs, worst relative error {:.2e} ({})",
            forms.len(),
            worst.0,
            worst.1
        ),
    )
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn criterion_3() -> Outcome {
    let softplus = |z: f64| {
        if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        }
    };
    let mut worst = 0.0f64;
    let mut bound_failures = 0;
    let mut condition_cases = 0;
    for &n in &[2usize, 10, 100, 1000, 10000] {
        for &gap in &[0.5, 2.0, 8.0, 192.0] {
            for &offset in &[-0.5 * gap, 0.0, 3.7] {
                let (a, b_up) = (offset, offset + gap);
                let model = BoundedMetricModel::new(a, b_up, n).unwrap();
                let closed = stationary_bias(&model);
                let loss = |b: f64| softplus(b - b_up) + (n - 1) as f64 * softplus(a - b);
                let lo = a - gap - 10.0;
                let hi = b_up + (n as f64).ln() + 10.0;
                let numeric = golden_section(loss, lo, hi);
                worst = worst.max((closed - numeric).abs());
                let holds = ((2 * n - 3) as f64) < gap.exp();
                if holds != corollary_condition(&model) {
                    bound_failures += 1;
                }
                if holds {
                    condition_cases += 1;
                    if !(a < closed && closed < b_up) {
                        bound_failures += 1;
                    }
                }
            }
        }
    }
    outcome(
        worst <= BIAS_TOL && bound_failures == 0,
        format!("60 grid points, max |closed - numeric| = {worst:.2e}, {condition_cases} in-bounds checks, {bound_failures} failures"),
    )
}

fn brute_force_uniform(entries: &[(f64, f64)], grid: &[f64]) -> usize {
    grid.iter()
        .map(|&t| {
            entries
                .iter()
                .filter(|&&(neg, pos)| neg <= t && t < pos)
                .count()
        })
        .max()
        .unwrap_or(0)
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    // Metrics live on a 0.01 lattice in [-0.5, 0.5], so every optimal
    // interval contains grid points.
    let grid: Vec<f64> = (0..SWEEP_GRID)
        .map(|i| -1.0 + 2.0 * i as f64 / (SWEEP_GRID - 1) as f64)
        .collect();
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = r.random_range(2..=6);
        let samples = r.random_range(1..=40);
        let batch = random_batch(&mut r, n, samples, true);
        let entries: Vec<(f64, f64)> = (0..batch.len())
            .map(|s| (batch.max_negative(s), batch.positive(s)))
            .collect();
        let uni = uniform_fit_batch(&batch);
        if uni.count != brute_force_uniform(&entries, &grid)
            || uniform_count_at(&batch, uni.threshold) != uni.count
        {
            mismatches += 1;
        }
        let cw = class_wise_fit(&batch);
        let mut cw_brute = 0;
        for c in 0..n {
            let members: Vec<(f64, f64)> = entries
                .iter()
                .zip(batch.labels())
                .filter(|&(_, &l)| l == c)
                .map(|(e, _)| *e)
                .collect();
            cw_brute += brute_force_uniform(&members, &grid);
        }
        let (cw_pct, _) = class_wise_uniform_accuracy(&batch);
        if cw.count != cw_brute || (cw_pct - 100.0 * cw_brute as f64 / samples as f64).abs() > 1e-12
        {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("200 instances against {SWEEP_GRID} thresholds, {mismatches} mismatches"),
    )
}

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let mut changed = 0;
    for _ in 0..500 {
        let n = r.random_range(2..=10);
        let samples = r.random_range(1..=100);
        let lattice = r.random_bool(0.3);
        let batch = random_batch(&mut r, n, samples, lattice);
        if sample_wise_accuracy(&batch).0 != sample_wise_accuracy(&softmax_transform(&batch)).0 {
            changed += 1;
        }
    }
    let witness =
        MetricBatch::from_flat(vec![3.0, 2.9, -10.0, -10.0, 1.0, 0.0], vec![0, 1], 3, true)
            .unwrap();
    let before = evaluate(&witness);
    let after = evaluate(&softmax_transform(&witness));
    let witness_ok = before.a_uni != after.a_uni && before.a_sw == after.a_sw;
    outcome(
        changed == 0 && witness_ok,
        format!(
            "500 batches, {changed} with changed A_SW; witness A_Uni {:.1}% -> {:.1}%",
            before.a_uni, after.a_uni
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let mut min = [f64::INFINITY; 4];
    for _ in 0..AMGM_SAMPLES {
        let n = r.random_range(2..=12);
        let scale = [0.1, 1.0, 10.0][r.random_range(0..3)];
        let tuple: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| scale * normal(&mut r)).collect())
            .collect();
        let label = r.random_range(0..n);
        let rep = check_amgm_inequalities(&tuple[label], label, Some(&tuple)).unwrap();
        for (m, s) in min.iter_mut().zip([
            rep.softmax,
            rep.mean_negative,
            rep.per_negative,
            rep.tuple_sum.unwrap(),
        ]) {
            *m = m.min(s.slack);
        }
    }
    let mut worst_equality = 0.0f64;
    for n in 2..=12 {
        for &v in &[-3.0, 0.0, 0.25, 5.0] {
            let m = vec![v; n];
            let tuple = vec![m.clone(); n];
            let rep = check_amgm_inequalities(&m, 0, Some(&tuple)).unwrap();
            for s in [
                rep.softmax,
                rep.mean_negative,
                rep.per_negative,
                rep.tuple_sum.unwrap(),
            ] {
                worst_equality = worst_equality.max(s.slack.abs());
            }
        }
    }
    let min_slack = min.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        min_slack >= SLACK_TOL && worst_equality <= EQUALITY_TOL,
        format!(
            "{AMGM_SAMPLES} samples per bound, min slack {:.2e} {:.2e} {:.2e} {:.2e}; max |slack| at uniform metrics {worst_equality:.2e}",
            min[0], min[1], min[2], min[3]
        ),
    )
}

fn trend_config(loss: &str) -> TrainConfig {
    let mut c = TrainConfig::new(LossSpec::from_name(loss, 96.0).unwrap());
    c.epochs = 40;
    c.lr0 = 0.02;
    c.batch_size = 64;
    c.seed = 7;
    c
}

fn criterion_7() -> Outcome {
    let spec = SyntheticSpec {
        num_classes: 16,
        dim: 32,
        samples_per_class: 200,
        center_scale: 1.0,
        noise_sigma: 0.35,
        seed: 7,
    };
    let data = generate_synthetic(&spec).unwrap();
    let holdout = generate_holdout(&spec, 100).unwrap();
    let runs: Vec<TrainRun> = ["bce-nu", "soft-nd"]
        .iter()
        .map(|l| train(&trend_config(l), &data, &data).unwrap())
        .collect();
    let bce = runs[0].final_report().unwrap();
    let soft = runs[1].final_report().unwrap();
    let uni_gap = bce.a_uni - soft.a_uni;
    let sw_diff = (bce.a_sw - soft.a_sw).abs();
    let hold_bce = evaluate(&runs[0].metrics(&holdout, true).unwrap());
    let hold_soft = evaluate(&runs[1].metrics(&holdout, true).unwrap());
    outcome(
        uni_gap >= TREND_MIN_UNI_GAP && sw_diff <= TREND_MAX_SW_DIFF && runs.iter().all(hierarchy_ok),
        format!(
            "A_Uni bce-nu {:.2} vs soft-nd {:.2} (gap {uni_gap:.2}), A_SW {:.2} vs {:.2} (diff {sw_diff:.2}); holdout A_Uni {:.2} vs {:.2}",
            bce.a_uni, soft.a_uni, bce.a_sw, soft.a_sw, hold_bce.a_uni, hold_soft.a_uni
        ),
    )
}

fn criterion_8() -> Outcome {
    let spec = SyntheticSpec {
        num_classes: 8,
        dim: 16,
        samples_per_class: 50,
        center_scale: 1.0,
        noise_sigma: 0.05,
        seed: 8,
    };
    let data = generate_synthetic(&spec).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for (loss, gamma) in [("bce-u", 1.0), ("bce-nu", 16.0)] {
        let mut c = TrainConfig::new(LossSpec::from_name(loss, gamma).unwrap());
        c.epochs = 60;
        c.seed = 8;
        let run = train(&c, &data, &data).unwrap();
        let raw = run.metrics(&data, false).unwrap();
        let t = run.final_head.unified_threshold().unwrap();
        let at_learned = uniform_count_at(&raw, t);
        let best = uniform_fit_batch(&raw);
        pass &= at_learned == best.count && hierarchy_ok(&run);
        lines.push(format!(
            "{loss}: learned t {t:.4} classifies {at_learned}/{}, optimum {} at t* {:.4}",
            raw.len(),
            best.count,
            best.threshold
        ));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_9() -> Outcome {
    let spec = SyntheticSpec {
        num_classes: 100,
        dim: 32,
        samples_per_class: 20,
        center_scale: 1.0,
        noise_sigma: 0.1,
        seed: 9,
    };
    let data = generate_synthetic(&spec).unwrap();
    let mut results = Vec::new();
    for gamma in [1.0, 16.0] {
        let mut c = TrainConfig::new(LossSpec::from_name("bce-nu", gamma).unwrap());
        c.epochs = 30;
        c.seed = 9;
        let run = train(&c, &data, &data).unwrap();
        let condition = corollary_condition(&BoundedMetricModel::normalized(gamma, 100).unwrap());
        results.push((
            gamma,
            run.final_report().unwrap().a_sw,
            condition,
            hierarchy_ok(&run),
        ));
    }
    let (small, large) = (results[0], results[1]);
    let pass = small.1 <= COLLAPSE_MAX_SW
        && !small.2
        && large.1 >= HEALTHY_MIN_SW
        && large.2
        && small.3
        && large.3;
    outcome(
        pass,
        format!(
            "gamma 1: A_SW {:.2} (need <= {COLLAPSE_MAX_SW}), condition {}; gamma 16: A_SW {:.2} (need >= {HEALTHY_MIN_SW}), condition {}",
            small.1, small.2, large.1, large.2
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut r = rng(10);
    let mut mismatches = 0;
    let (mut column_cases, mut global_cases) = (0, 0);
    for _ in 0..2000 {
        let n = r.random_range(2..=8);
        let boost = r.random_range(0.0..4.0);
        // entries[i][j] = c_i(x^(j)); sample j carries column j.
        let entries: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| normal(&mut r) + if i == j { boost } else { 0.0 })
                    .collect()
            })
            .collect();
        let values: Vec<f64> = (0..n)
            .flat_map(|j| (0..n).map(|i| entries[i][j]).collect::<Vec<_>>())
            .collect();
        let batch = MetricBatch::from_flat(values, (0..n).collect(), n, true).unwrap();
        let ids: Vec<usize> = (0..n).rev().collect();
        let mat = metric_matrix(&batch, &ids).unwrap();
        let all_correct = (0..n).all(|j| (0..n).all(|i| i == j || entries[i][j] < entries[j][j]));
        if mat.column_dominant != all_correct {
            mismatches += 1;
        }
        let sw_all = sample_wise_accuracy(&batch).1.iter().all(|&c| c);
        if sw_all != all_correct {
            mismatches += 1;
        }
        column_cases += all_correct as usize;
        if mat.global_dominant {
            global_cases += 1;
            if uniform_fit_batch(&batch).count != n {
                mismatches += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && column_cases > 0 && global_cases > 0,
        format!("2000 tuples ({column_cases} column-dominant, {global_cases} globally dominant), {mismatches} mismatches"),
    )
}

fn criterion_11() -> Outcome {
    let mut r = rng(11);
    for attempt in 1..=100_000 {
        let n = r.random_range(2..=4);
        let samples = r.random_range(n..=6);
        let values: Vec<f64> = (0..n * samples)
            .map(|_| r.random_range(0..5) as f64)
            .collect();
        let labels: Vec<usize> = (0..samples)
            .map(|s| if s < n { s } else { r.random_range(0..n) })
            .collect();
        let batch = MetricBatch::from_flat(values, labels.clone(), n, true).unwrap();
        let (type2, _) = class_wise_type2_accuracy(&batch);
        let (cw, _) = class_wise_uniform_accuracy(&batch);
        if type2 > cw {
            let fit = class_wise_type2_fit(&batch);
            let rows: Vec<String> = batch
                .rows()
                .map(|(row, l)| format!("{l}:{row:?}"))
                .collect();
            return outcome(
                true,
                format!(
                    "found after {attempt} draws: type II {type2:.1}% ({}/{}) > class-wise {cw:.1}%; batch {}",
                    fit.count,
                    fit.total,
                    rows.join(" ")
                ),
            );
        }
    }
    outcome(
        false,
        "no batch with type II accuracy above class-wise accuracy found",
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("accuracy hierarchy", Duration::from_secs(10), criterion_1),
        ("gradient correctness", Duration::from_secs(30), criterion_2),
        ("stationary bias", Duration::from_secs(5), criterion_3),
        (
            "threshold sweep optimality",
            Duration::from_secs(20),
            criterion_4,
        ),
        ("softmax transform", Duration::from_secs(5), criterion_5),
        ("AM-GM bounds", Duration::from_secs(10), criterion_6),
        (
            "BCE vs SoftMax uniform trend",
            Duration::from_secs(120),
            criterion_7,
        ),
        (
            "learned bias vs threshold",
            Duration::from_secs(60),
            criterion_8,
        ),
        (
            "small-gamma collapse",
            Duration::from_secs(120),
            criterion_9,
        ),
        (
            "metric-matrix dominance",
            Duration::from_secs(5),
            criterion_10,
        ),
        ("type I vs type II", Duration::from_secs(10), criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= *budget;
        failed += !pass as usize;
        println!(
            "criterion {:>2} {:<30} {} [{:.2?} / {:?}] {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed,
            budget,
            result.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
