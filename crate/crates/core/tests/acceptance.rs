//! Acceptance suite. Runs every criterion in sequence, prints one
//! `PASS`/`FAIL` line each, and exits nonzero if any fails.
//!
//! Criterion 5 trains 40 models; its wall time is measured on its own, so the
//! suite runs without the libtest harness and never in parallel with itself.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mvfuse::data::{generate_synthetic, split, MultiViewDataset, Scheme, SyntheticSpec, View};
use mvfuse::experiment::cli::{gradcheck_random, GRADCHECK_TOLERANCE};
use mvfuse::experiment::{
    compare_fusions, emit_curves, load_model, read_curve_file, run_experiment, run_once, save_model,
    Comparison, ExperimentConfig, SavedModel, PRESETS,
};
use mvfuse::model::{
    attention_weights, encoder_block, forward, fuse, predict_proba, AttentionParams, Architecture, Fusion, FusionKind,
    Mode, ModelParams,
};
use mvfuse::numerics::{Matrix, Rng};
use mvfuse::training::{attention_penalty, AdamConfig, AdamState, EpochRecord};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- 1

fn gradients() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for seed in 0..3 {
        let (check, _) = gradcheck_random(FusionKind::SelfAttention, seed).unwrap();
        worst = worst.max(check.max_rel_error);
    }
    notes.push(format!("self-attention max rel err {worst:.2e} over 3 instances"));
    for kind in [FusionKind::MaxPool, FusionKind::MeanPool, FusionKind::WeightedSum] {
        let (check, _) = gradcheck_random(kind, 0).unwrap();
        notes.push(format!("{kind} {:.2e}", check.max_rel_error));
        worst = worst.max(check.max_rel_error);
    }
    let elapsed = start.elapsed();
    notes.push(format!("{:.2} s", elapsed.as_secs_f64()));
    verdict(
        worst < GRADCHECK_TOLERANCE && elapsed < Duration::from_secs(60),
        notes.join(", "),
    )
}

// ---------------------------------------------------------------- 2

/// `‖A·Aᵀ − I‖²_F` with explicit loops.
fn penalty_oracle(a: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (i, ri) in a.iter().enumerate() {
        for (j, rj) in a.iter().enumerate() {
            let dot: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            total += (dot - target) * (dot - target);
        }
    }
    total
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

fn penalty() -> Verdict {
    let half = attention_penalty(&Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap());
    let ident = attention_penalty(&Matrix::identity(2));
    let mut rng = Rng::new(2);
    let mut min: f64 = f64::INFINITY;
    let mut oracle_gap: f64 = 0.0;
    for _ in 0..1000 {
        let hops = 1 + rng.below(5);
        let views = 2 + rng.below(5);
        let rows: Vec<Vec<f64>> = (0..hops)
            .map(|_| softmax(&(0..views).map(|_| rng.uniform(-4.0, 4.0)).collect::<Vec<_>>()))
            .collect();
        let p = attention_penalty(&Matrix::from_rows(&rows).unwrap());
        min = min.min(p);
        oracle_gap = oracle_gap.max((p - penalty_oracle(&rows)).abs());
    }
    verdict(
        (half - 1.0).abs() <= 1e-12 && ident == 0.0 && min >= 0.0 && oracle_gap < 1e-12,
        format!("P(half) = {half}, P(I) = {ident}, min over 1000 = {min:.3e}, max gap to loop oracle {oracle_gap:.1e}"),
    )
}

// ---------------------------------------------------------------- 3

fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-scale, scale))
}

fn attention_invariants() -> Verdict {
    let mut rng = Rng::new(3);
    let mut row_err: f64 = 0.0;
    let mut mean_err: f64 = 0.0;
    for _ in 0..1000 {
        let hidden = 1 + rng.below(8);
        let units = 1 + rng.below(10);
        let hops = 1 + rng.below(5);
        let views = 2 + rng.below(5);
        let p = AttentionParams {
            ws1: random_matrix(units, hidden, 2.0, &mut rng),
            ws2: random_matrix(hops, units, 2.0, &mut rng),
        };
        let z = random_matrix(hidden, views, 3.0, &mut rng);
        let a = attention_weights(&p, &z).unwrap();
        for r in 0..a.rows() {
            row_err = row_err.max((a.row(r).iter().sum::<f64>() - 1.0).abs());
        }

        let flat = AttentionParams {
            ws1: random_matrix(units, hidden, 2.0, &mut rng),
            ws2: Matrix::zeros(1, units),
        };
        let att = fuse(&Fusion::SelfAttention(flat), &z).unwrap();
        let mean = fuse(&Fusion::MeanPool, &z).unwrap();
        mean_err = mean_err.max(max_diff(&att.representation, &mean.representation));
    }
    verdict(
        row_err <= 1e-12 && mean_err <= 1e-12,
        format!("max |row sum - 1| {row_err:.1e}, max |self-attention - mean| with W_s2 = 0 {mean_err:.1e}"),
    )
}

// ---------------------------------------------------------------- 4

fn random_model(arch: &Architecture, rng: &mut Rng) -> ModelParams {
    let mut m = ModelParams::init(arch, rng).unwrap();
    for t in m.tensors_mut() {
        for v in t.as_mut_slice() {
            *v += rng.uniform(-0.3, 0.3);
        }
    }
    m
}

fn permuted(m: &ModelParams, perm: &[usize]) -> ModelParams {
    let mut p = m.clone();
    p.encoders = perm.iter().map(|&v| m.encoders[v].clone()).collect();
    if let Fusion::WeightedSum { logits } = &m.fusion {
        p.fusion = Fusion::WeightedSum {
            logits: Matrix::row_vector(perm.iter().map(|&v| logits.get(0, v)).collect()).unwrap(),
        };
    }
    p
}

fn permutation_invariance() -> Verdict {
    let mut rng = Rng::new(4);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for views in [2, 3, 5] {
        for kind in FusionKind::ALL {
            for _ in 0..5 {
                let dims: Vec<usize> = (0..views).map(|_| 2 + rng.below(6)).collect();
                let arch = Architecture {
                    view_dims: dims.clone(),
                    encoder_widths: [7, 5, 4],
                    fusion: kind,
                    attention_units: 6,
                    hops: 1 + rng.below(3),
                    head_hidden: 9,
                    classes: 3,
                };
                let m = random_model(&arch, &mut rng);
                let mut perm: Vec<usize> = (0..views).collect();
                rng.shuffle(&mut perm);
                let p = permuted(&m, &perm);

                let batch: Vec<Matrix> = dims.iter().map(|&d| random_matrix(6, d, 2.0, &mut rng)).collect();
                let batch_p: Vec<Matrix> = perm.iter().map(|&v| batch[v].clone()).collect();
                for i in 0..6 {
                    let s: Vec<&[f64]> = batch.iter().map(|b| b.row(i)).collect();
                    let sp: Vec<&[f64]> = batch_p.iter().map(|b| b.row(i)).collect();
                    let z = encoder_block(&m.encoders, &s, &mut Mode::Eval).unwrap();
                    let zp = encoder_block(&p.encoders, &sp, &mut Mode::Eval).unwrap();
                    let f = fuse(&m.fusion, &z).unwrap();
                    let fp = fuse(&p.fusion, &zp).unwrap();
                    worst = worst.max(max_diff(&f.representation, &fp.representation));
                    let y = forward(&m, &s, &mut Mode::Eval).unwrap();
                    let yp = forward(&p, &sp, &mut Mode::Eval).unwrap();
                    worst = worst.max(max_diff(&y.probabilities, &yp.probabilities));
                }
                let y = predict_proba(&m, &batch).unwrap();
                let yp = predict_proba(&p, &batch_p).unwrap();
                worst = worst.max(max_diff(y.as_slice(), yp.as_slice()));
                cases += 1;
            }
        }
    }
    verdict(
        worst <= 1e-12,
        format!("{cases} models over V in {{2, 3, 5}} and all strategies, max deviation {worst:.1e}"),
    )
}

// ---------------------------------------------------------------- 5, 6, 9

fn xor_dataset() -> MultiViewDataset {
    generate_synthetic(&SyntheticSpec::xor2(2000, 10, 0.1, 0)).unwrap()
}

/// Logistic regression on one view by full-batch gradient descent, with
/// z-scoring from the training rows. Returns test accuracy.
fn logistic_oracle(ds: &MultiViewDataset, view: usize, seed: u64) -> f64 {
    let s = split(&ds.labels, ds.num_classes, seed).unwrap();
    let x = &ds.views[view].features;
    let d = x.cols();
    let n = s.train.len() as f64;
    let mut mean = vec![0.0; d];
    let mut sd = vec![0.0; d];
    for &i in &s.train {
        for j in 0..d {
            mean[j] += x.get(i, j) / n;
        }
    }
    for &i in &s.train {
        for j in 0..d {
            sd[j] += (x.get(i, j) - mean[j]).powi(2) / n;
        }
    }
    let feat = |i: usize, j: usize| (x.get(i, j) - mean[j]) / sd[j].sqrt().max(1e-12);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for _ in 0..500 {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for &i in &s.train {
            let z: f64 = b + (0..d).map(|j| w[j] * feat(i, j)).sum::<f64>();
            let r = 1.0 / (1.0 + (-z).exp()) - ds.labels[i] as f64;
            for (j, g) in gw.iter_mut().enumerate() {
                *g += r * feat(i, j) / n;
            }
            gb += r / n;
        }
        for j in 0..d {
            w[j] -= 0.5 * gw[j];
        }
        b -= 0.5 * gb;
    }
    let correct = s
        .test
        .iter()
        .filter(|&&i| {
            let z: f64 = b + (0..d).map(|j| w[j] * feat(i, j)).sum::<f64>();
            usize::from(z > 0.0) == ds.labels[i]
        })
        .count();
    correct as f64 / s.test.len() as f64
}

fn synthetic_end_to_end(cmp: &Comparison, elapsed: Duration, ds: &MultiViewDataset) -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for r in &cmp.reports {
        let kind = r.settings.architecture.fusion;
        let ok = r.accuracies.len() == 10 && r.mean >= 0.95;
        pass &= ok;
        notes.push(format!("{kind} {:.4}±{:.4}", r.mean, r.std));
    }
    let oracle: Vec<f64> = (0..2).map(|v| logistic_oracle(ds, v, 0)).collect();
    pass &= oracle.iter().all(|&a| a <= 0.60);
    notes.push(format!("single-view logistic {:.3}/{:.3}", oracle[0], oracle[1]));
    pass &= elapsed < Duration::from_secs(300);
    notes.push(format!("{:.1} s", elapsed.as_secs_f64()));
    verdict(pass, notes.join(", "))
}

/// Mean of the (up to) ten epochs ending at `epoch` (1-based).
fn moving_average(curve: &[EpochRecord], epoch: usize) -> f64 {
    let lo = epoch.saturating_sub(10);
    let window = &curve[lo..epoch];
    window.iter().map(|r| r.train_total_loss).sum::<f64>() / window.len() as f64
}

fn convergence(cmp: &Comparison) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for r in &cmp.reports {
        let mut worst: f64 = 0.0;
        for run in &r.runs {
            let ratio = moving_average(&run.curves, 50) / moving_average(&run.curves, 5);
            worst = worst.max(ratio);
        }
        pass &= worst < 0.5;
        notes.push(format!("{} worst ratio {worst:.3}", r.settings.architecture.fusion));
    }
    verdict(pass, notes.join(", "))
}

fn pretraining(cmp: &Comparison) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let report = &cmp.reports[0];
    let epochs = report.settings.pretrain.map_or(0, |p| p.epochs);
    for run in &report.runs {
        for v in &run.pretrain.as_ref().expect("pretraining enabled by default").views {
            worst = worst.max(v.final_mse / v.initial_mse);
            count += 1;
        }
    }
    verdict(
        count == 20 && epochs <= 100 && worst <= 0.5,
        format!("{count} view/run pairs, {epochs} epochs, worst final/initial MSE {worst:.3}"),
    )
}

// ---------------------------------------------------------------- 7

fn protocol() -> Verdict {
    let ds = xor_dataset();
    let cfg = ExperimentConfig {
        synthetic: Some(SyntheticSpec::xor2(2000, 10, 0.1, 0)),
        epochs: Some(3),
        pretrain_epochs: Some(2),
        attention_units: Some(30),
        runs: Some(10),
        seed: Some(100),
        ..ExperimentConfig::default()
    };
    let settings = cfg.resolve(&ds).unwrap();
    let report = run_experiment(&ds, &settings).unwrap();
    let again = run_experiment(&ds, &settings).unwrap();

    let n = report.accuracies.len();
    let mean: f64 = report.accuracies.iter().sum::<f64>() / n as f64;
    let var = report.accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let stats_ok = n == 10
        && report.runs.len() == 10
        && !report.single_run
        && (report.mean - mean).abs() < 1e-15
        && (report.std - var.sqrt()).abs() < 1e-15
        && report.seeds == (100..110).collect::<Vec<u64>>();

    let mut worst_class_dev: f64 = 0.0;
    let mut split_ok = true;
    for run in &report.runs {
        let s = split(&ds.labels, ds.num_classes, run.seed).unwrap();
        split_ok &= run.split_sizes == [s.train.len(), s.validation.len(), s.test.len()];
        let mut all: Vec<usize> = [s.train.clone(), s.validation.clone(), s.test.clone()].concat();
        all.sort_unstable();
        split_ok &= all == (0..ds.len()).collect::<Vec<_>>();
        for class in 0..ds.num_classes {
            let total = ds.labels.iter().filter(|&&y| y == class).count() as f64;
            for (part, share) in [(&s.train, 0.6), (&s.validation, 0.2), (&s.test, 0.2)] {
                let count = part.iter().filter(|&&i| ds.labels[i] == class).count() as f64;
                worst_class_dev = worst_class_dev.max((count - share * total).abs());
            }
        }
    }
    let same = serde_json::to_string(&report).unwrap() == serde_json::to_string(&again).unwrap();
    verdict(
        stats_ok && split_ok && worst_class_dev <= 1.0 && same,
        format!(
            "{n} accuracies, mean {:.4}, std {:.4}, max per-class split deviation {worst_class_dev}, reproducible: {same}",
            report.mean, report.std
        ),
    )
}

// ---------------------------------------------------------------- 8

/// Adam written out for plain vectors.
struct AdamOracle {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamOracle {
    fn step(&mut self, x: &mut [f64], g: &[f64], lr: f64) {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        self.t += 1;
        for i in 0..x.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g[i] * g[i];
            let mh = self.m[i] / (1.0 - b1.powi(self.t));
            let vh = self.v[i] / (1.0 - b2.powi(self.t));
            x[i] -= lr * mh / (vh.sqrt() + eps);
        }
    }
}

fn optimizer() -> Verdict {
    let a = [1.0, 3.0, 0.5];
    let target = [0.5, -1.0, 2.0];
    let grad = |x: &[f64]| -> Vec<f64> { (0..3).map(|i| 2.0 * a[i] * (x[i] - target[i])).collect() };

    let mut x = Matrix::row_vector(vec![2.0, 1.0, -1.5]).unwrap();
    let mut opt = AdamState::new(&[&x], AdamConfig::default());
    let mut oracle = AdamOracle {
        m: vec![0.0; 3],
        v: vec![0.0; 3],
        t: 0,
    };
    let mut y = x.as_slice().to_vec();
    let mut gap: f64 = 0.0;
    for step in 0..10 {
        let lr = if step < 5 { 0.1 } else { 0.05 };
        let g = Matrix::row_vector(grad(x.as_slice())).unwrap();
        opt.step(&mut [&mut x], &[g], lr).unwrap();
        let gy = grad(&y);
        oracle.step(&mut y, &gy, lr);
        gap = gap.max(max_diff(x.as_slice(), &y));
    }

    let mut p = Matrix::row_vector(vec![0.3, -7.0, 1e-3]).unwrap();
    let orig = p.clone();
    let mut idle = AdamState::new(&[&p], AdamConfig::default());
    for _ in 0..10 {
        idle.step(&mut [&mut p], &[Matrix::zeros(1, 3)], 0.1).unwrap();
    }
    verdict(
        gap <= 1e-12 && p == orig,
        format!("max gap to oracle over 10 steps {gap:.1e}, zero-gradient steps identity: {}", p == orig),
    )
}

// ---------------------------------------------------------------- 10

fn round_trips(cmp: &Comparison) -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_synthetic(&SyntheticSpec {
        scheme: Scheme::SharedSpecific,
        samples: 150,
        views: 3,
        classes: 3,
        dim: 8,
        noise: 0.1,
        shared: 0.5,
        seed: 9,
    })
    .unwrap();
    let mut models_ok = true;
    for kind in FusionKind::ALL {
        let cfg = ExperimentConfig {
            fusion: Some(kind),
            epochs: Some(3),
            pretrain_epochs: Some(2),
            attention_units: Some(12),
            ..ExperimentConfig::default()
        };
        let trained = run_once(&ds, &cfg.resolve(&ds).unwrap(), 0).unwrap();
        let saved = SavedModel::new(ds.name.clone(), trained.model, Some(trained.normalization));
        let path = dir.path().join(format!("{kind}.json"));
        save_model(&saved, &path).unwrap();
        let back = load_model(&path).unwrap();
        let data = back.normalization.as_ref().unwrap().apply(&ds).unwrap();
        let views: Vec<Matrix> = data.views.iter().map(|v| v.features.clone()).collect();
        let before = predict_proba(&saved.model, &views).unwrap();
        let after = predict_proba(&back.model, &views).unwrap();
        models_ok &= before.as_slice() == after.as_slice() && back == saved;
    }

    let mut curves_ok = true;
    let mut files = 0;
    for r in &cmp.reports {
        let sub = dir.path().join(r.settings.architecture.fusion.as_str());
        let written = emit_curves(r, &sub).unwrap();
        for (run, path) in r.runs.iter().zip(&written) {
            curves_ok &= read_curve_file(path).unwrap() == run.curves;
            files += 1;
        }
    }
    verdict(
        models_ok && curves_ok && files == 40,
        format!("4 strategies save/load bit-identical: {models_ok}, {files} curve files exact: {curves_ok}"),
    )
}

// ---------------------------------------------------------------- 11

/// Published hyperparameters: name, encoder widths, d_c, batch size.
const PUBLISHED: [(&str, [usize; 3], usize, usize); 8] = [
    ("leaves", [64, 32, 16], 3, 4),
    ("reuters", [2048, 1024, 512], 2, 16),
    ("yaleface", [1024, 512, 512], 2, 32),
    ("bbc", [1024, 512, 512], 4, 32),
    ("cornell", [1024, 512, 128], 2, 16),
    ("texas", [1024, 512, 128], 2, 16),
    ("washington", [1024, 512, 128], 2, 16),
    ("wisconsin", [1024, 512, 128], 2, 16),
];

fn shaped_like(name: &str, dims: &[usize], classes: usize, samples: usize, rng: &mut Rng) -> MultiViewDataset {
    let labels: Vec<usize> = (0..samples).map(|i| i % classes).collect();
    let views = dims
        .iter()
        .enumerate()
        .map(|(v, &d)| View {
            name: format!("view{v}"),
            features: Matrix::from_fn(samples, d, |i, j| {
                let signal = if j % classes == labels[i] { 1.0 } else { 0.0 };
                signal + 0.3 * rng.normal()
            }),
        })
        .collect();
    MultiViewDataset::new(name, classes, views, labels).unwrap()
}

fn presets() -> Verdict {
    let mut rng = Rng::new(11);
    let mut ok = PRESETS.len() == PUBLISHED.len();
    for (p, (name, widths, hops, batch)) in PRESETS.iter().zip(PUBLISHED) {
        ok &= p.name == name && p.encoder_widths == widths && p.hops == hops && p.batch_size == batch;
        let ds = shaped_like(p.name, p.view_dims, p.classes, 3 * p.classes, &mut rng);
        let settings = ExperimentConfig::default().resolve(&ds).unwrap();
        ok &= settings.preset.as_deref() == Some(name)
            && settings.architecture.encoder_widths == widths
            && settings.architecture.hops == hops
            && settings.training.batch_size == batch
            && settings.validate().is_ok();
    }

    let leaves = shaped_like("leaves", &[64, 64, 64], 6, 96, &mut rng);
    let cfg = ExperimentConfig {
        epochs: Some(5),
        pretrain_epochs: Some(3),
        runs: Some(2),
        ..ExperimentConfig::default()
    };
    let cmp = compare_fusions(&leaves, &cfg.resolve(&leaves).unwrap()).unwrap();
    let table = cmp.table();
    let lines: Vec<&str> = table.lines().collect();
    let shaped = cmp.reports.len() == 4
        && lines.len() == 5
        && lines[0].contains("reference")
        && lines[1..].iter().all(|l| l.ends_with("100.0 ± 0.0"));
    for line in &lines {
        println!("    {line}");
    }
    verdict(
        ok && shaped,
        format!("8 presets match the published table: {ok}, leaves-shaped comparison table rows: {}", lines.len() - 1),
    )
}

// ----------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        }
    }
}

fn main() {
    let mut failed = Vec::new();
    let mut report = |n: usize, title: &str, v: Verdict| {
        let word = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {word}  {title}: {}", v.detail);
        if !v.pass {
            failed.push(n);
        }
    };

    report(1, "gradient check", guarded(gradients));
    report(2, "penalty oracle", guarded(penalty));
    report(3, "attention invariants", guarded(attention_invariants));
    report(4, "view-permutation invariance", guarded(permutation_invariance));

    let ds = xor_dataset();
    let cfg = ExperimentConfig {
        synthetic: Some(SyntheticSpec::xor2(2000, 10, 0.1, 0)),
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let cmp = panic::catch_unwind(AssertUnwindSafe(|| compare_fusions(&ds, &cfg.resolve(&ds).unwrap()).unwrap()));
    let elapsed = start.elapsed();
    match &cmp {
        Ok(cmp) => {
            for line in cmp.table().lines() {
                println!("    {line}");
            }
            report(5, "synthetic end to end", guarded(|| synthetic_end_to_end(cmp, elapsed, &ds)));
            report(6, "convergence", guarded(|| convergence(cmp)));
        }
        Err(_) => {
            report(5, "synthetic end to end", verdict(false, "comparison failed"));
            report(6, "convergence", verdict(false, "comparison failed"));
        }
    }
    report(7, "protocol fidelity", guarded(protocol));
    report(8, "optimizer oracle", guarded(optimizer));
    match &cmp {
        Ok(cmp) => {
            report(9, "pretraining effect", guarded(|| pretraining(cmp)));
            report(10, "round trips", guarded(|| round_trips(cmp)));
        }
        Err(_) => {
            report(9, "pretraining effect", verdict(false, "comparison failed"));
            report(10, "round trips", verdict(false, "comparison failed"));
        }
    }
    report(11, "presets", guarded(presets));

    if !failed.is_empty() {
        println!("acceptance: {} of 11 criteria failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
    println!("acceptance: all 11 criteria passed");
}
