use std::fs;
use std::path::Path;
use std::process::Command;

use mvfuse::data::SyntheticSpec;
use mvfuse::experiment::{cli_main, compare_fusions, read_report, run_experiment, ExperimentConfig};
use mvfuse::model::FusionKind;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mvfuse"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        "attention_units = 8\nhead_hidden = 16\nepochs = 3\npretrain_epochs = 2\nruns = 2\nseed = 5\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synth_then_bench_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    let (code, out, err) = run(&["synth", "--scheme", "xor2", "--n", "200", "--out", data.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("200 samples"));
    assert!(data.join("manifest.toml").exists());

    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("bench");
    let manifest = data.join("manifest");
    let (code, out, err) = run(&[
        "bench",
        "--config",
        &cfg,
        "--data",
        manifest.to_str().unwrap(),
        "--fusion",
        "mean",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("accuracy"), "{out}");
    let report = read_report(&out_dir.join("report.json")).unwrap();
    assert_eq!(report.accuracies.len(), 2);
    assert_eq!(report.settings.architecture.fusion, FusionKind::MeanPool);
    assert!(out_dir.join("curves/run_1.csv").exists());
    assert!(out_dir.join("curves/mean.csv").exists());
}

#[test]
fn train_then_eval_reports_the_same_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    let d = data.to_str().unwrap();
    assert_eq!(run(&["synth", "--scheme", "shared+specific", "--views", "3", "--classes", "3", "--n", "90", "--out", d]).0, 0);
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("t");
    let (code, out, err) = run(&["train", "--config", &cfg, "--data", d, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("test accuracy"));
    let model = out_dir.join("model.json");
    let (code, out, err) = run(&["eval", "--model", model.to_str().unwrap(), "--data", d]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("on 90 samples"), "{out}");

    let other = dir.path().join("other");
    let o = other.to_str().unwrap();
    assert_eq!(run(&["synth", "--views", "3", "--classes", "3", "--scheme", "shared+specific", "--dim", "4", "--n", "30", "--out", o]).0, 0);
    let (code, _, err) = run(&["eval", "--model", model.to_str().unwrap(), "--data", o]);
    assert_eq!(code, 1);
    assert!(err.contains("view 0: expected 10 features, got 4"), "{err}");
}

#[test]
fn compare_prints_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    let d = data.to_str().unwrap();
    assert_eq!(run(&["synth", "--n", "100", "--out", d]).0, 0);
    let cfg = small_config(dir.path());
    let (code, out, err) = run(&["compare", "--config", &cfg, "--data", d, "--runs", "1"]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5, "{out}");
    for (line, kind) in lines[1..].iter().zip(FusionKind::ALL) {
        assert!(line.starts_with(kind.title()), "{line}");
        assert!(line.contains('±'));
    }
}

#[test]
fn gradcheck_passes_for_every_strategy() {
    for fusion in ["self-attention", "max", "mean", "weighted-sum"] {
        let (code, out, err) = run(&["gradcheck", "--fusion", fusion]);
        assert_eq!(code, 0, "{fusion}: {err}");
        let last = out.lines().last().unwrap();
        let value: f64 = last.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(value < 1e-4, "{fusion}: {last}");
    }
}

#[test]
fn usage_errors_exit_nonzero() {
    assert_eq!(cli_main(["mvfuse", "bench", "--bogus"]), 2);
    assert_eq!(cli_main(["mvfuse", "frobnicate"]), 2);
    assert_eq!(cli_main(["mvfuse"]), 2);
    assert_eq!(cli_main(["mvfuse", "bench", "--fusion", "median"]), 2);
    assert_eq!(cli_main(["mvfuse", "--help"]), 0);
    let (code, _, err) = run(&["bench", "--bogus"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"), "{err}");
    // Parses, but there is no dataset to run on.
    assert_eq!(cli_main(["mvfuse", "bench"]), 1);
}

#[test]
fn bad_config_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "epochs = 3\nlearning_rate = 0.1\n").unwrap();
    let (code, _, err) = run(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("bad.toml:2"), "{err}");
}

fn xor_config(runs: usize) -> ExperimentConfig {
    ExperimentConfig {
        synthetic: Some(SyntheticSpec::xor2(200, 6, 0.1, 3)),
        attention_units: Some(10),
        head_hidden: Some(32),
        epochs: Some(5),
        pretrain_epochs: Some(3),
        runs: Some(runs),
        seed: Some(21),
        ..ExperimentConfig::default()
    }
}

#[test]
fn compare_matches_separate_runs() {
    let cfg = xor_config(2);
    let ds = cfg.dataset().unwrap();
    let settings = cfg.resolve(&ds).unwrap();
    let cmp = compare_fusions(&ds, &settings).unwrap();
    assert_eq!(cmp.reports.len(), 4);
    for (report, kind) in cmp.reports.iter().zip(FusionKind::ALL) {
        let alone = run_experiment(&ds, &settings.with_fusion(kind, settings.training.objective.lambda)).unwrap();
        assert_eq!(report, &alone, "{kind}");
    }
    let splits: Vec<_> = cmp.reports.iter().map(|r| r.runs[1].split_sizes).collect();
    assert!(splits.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn reports_are_deterministic() {
    let cfg = xor_config(2);
    let ds = cfg.dataset().unwrap();
    let settings = cfg.resolve(&ds).unwrap();
    let a = run_experiment(&ds, &settings).unwrap();
    let b = run_experiment(&ds, &settings).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

    let mut shifted = settings.clone();
    shifted.seed += 1;
    let c = run_experiment(&ds, &shifted).unwrap();
    assert_eq!(c.runs[0].curves, a.runs[1].curves);
    assert_ne!(c.runs[0].curves, a.runs[0].curves);
}
