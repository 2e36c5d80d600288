//! `mvfuse` command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{generate_synthetic, normalize, split, write_dataset, Scheme, SyntheticSpec};
use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, Settings};
use crate::experiment::persist::{emit_curves, load_model, save_model, write_json, SavedModel};
use crate::experiment::runner::{compare_fusions, run_experiment, run_once, summarize};
use crate::model::{Architecture, FusionKind, ModelParams};
use crate::numerics::{GradCheck, Matrix, Rng};
use crate::training::{check_gradients, evaluate, pretrain_autoencoders, ObjectiveConfig, PretrainConfig};

/// Gradient checks at or above this relative error fail.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "mvfuse", version, about = "Multi-view classification with attention-based view fusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train and test once; saves the selected model.
    Train(Common),
    /// Repeated runs with seeds seed, seed+1, ...; reports mean and std.
    Bench(Common),
    /// Bench every fusion strategy on identical splits.
    Compare(Common),
    /// Autoencoder pretraining only; reports reconstruction error per view.
    Pretrain(Common),
    /// Write a synthetic dataset in manifest form.
    Synth(SynthArgs),
    /// Finite-difference check of the full objective on a random model.
    Gradcheck(GradcheckArgs),
    /// Accuracy of a saved model on a dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset manifest, or a directory containing manifest.toml.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    fusion: Option<FusionKind>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Directory for reports, curves and models.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value = "xor2")]
    scheme: Scheme,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 2)]
    views: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    /// Weight of the shared component (shared+specific only).
    #[arg(long, default_value_t = 0.5)]
    shared: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value = "self-attention")]
    fusion: FusionKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(c) => train_cmd(&c),
        Command::Bench(c) => bench_cmd(&c),
        Command::Compare(c) => compare_cmd(&c),
        Command::Pretrain(c) => pretrain_cmd(&c),
        Command::Synth(s) => synth_cmd(&s),
        Command::Gradcheck(g) => gradcheck_cmd(&g),
        Command::Eval(e) => eval_cmd(&e),
    }
}

/// Accepts a manifest path, the path without `.toml`, or its directory.
pub fn resolve_manifest(path: &Path) -> PathBuf {
    if path.is_dir() {
        return path.join("manifest.toml");
    }
    if !path.exists() && path.extension().is_none() {
        let with_ext = path.with_extension("toml");
        if with_ext.exists() {
            return with_ext;
        }
    }
    path.to_path_buf()
}

fn settings(c: &Common) -> Result<(crate::data::MultiViewDataset, Settings)> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::read(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(data) = &c.data {
        cfg.data = Some(resolve_manifest(data));
        cfg.synthetic = None;
    }
    if c.fusion.is_some() {
        cfg.fusion = c.fusion;
    }
    if c.runs.is_some() {
        cfg.runs = c.runs;
    }
    if c.seed.is_some() {
        cfg.seed = c.seed;
    }
    if c.epochs.is_some() {
        cfg.epochs = c.epochs;
    }
    let ds = cfg.dataset()?;
    let settings = cfg.resolve(&ds)?;
    Ok((ds, settings))
}

fn train_cmd(c: &Common) -> Result<()> {
    let (ds, settings) = settings(c)?;
    let trained = run_once(&ds, &settings, 0)?;
    println!(
        "{} on {}: test accuracy {:.4} (best epoch {})",
        settings.architecture.fusion,
        ds.name,
        trained.result.test_accuracy,
        trained.result.best_epoch.map_or("-".into(), |e| e.to_string())
    );
    if let Some(out) = &c.out {
        let report = summarize(&settings, vec![trained.result]);
        write_json(&report, &out.join("report.json"))?;
        emit_curves(&report, &out.join("curves"))?;
        let saved = SavedModel::new(ds.name.clone(), trained.model, Some(trained.normalization));
        save_model(&saved, &out.join("model.json"))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn bench_cmd(c: &Common) -> Result<()> {
    let (ds, settings) = settings(c)?;
    let report = run_experiment(&ds, &settings)?;
    let accs: Vec<String> = report.accuracies.iter().map(|a| format!("{a:.4}")).collect();
    println!("{} on {}: runs [{}]", settings.architecture.fusion, ds.name, accs.join(", "));
    let note = if report.single_run { " (single run)" } else { "" };
    println!(
        "accuracy {:.2} ± {:.2} %{note}",
        100.0 * report.mean,
        100.0 * report.std
    );
    if let Some(out) = &c.out {
        write_json(&report, &out.join("report.json"))?;
        emit_curves(&report, &out.join("curves"))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn compare_cmd(c: &Common) -> Result<()> {
    let (ds, settings) = settings(c)?;
    let cmp = compare_fusions(&ds, &settings)?;
    print!("{}", cmp.table());
    if let Some(out) = &c.out {
        write_json(&cmp, &out.join("comparison.json"))?;
        for r in &cmp.reports {
            emit_curves(r, &out.join("curves").join(r.settings.architecture.fusion.as_str()))?;
        }
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn pretrain_cmd(c: &Common) -> Result<()> {
    let (ds, settings) = settings(c)?;
    let cfg = settings.pretrain.unwrap_or(PretrainConfig {
        batch_size: settings.training.batch_size,
        ..Default::default()
    });
    let indices = split(&ds.labels, ds.num_classes, settings.seed)?;
    let (data, _) = normalize(&ds, &indices.train)?;
    let model = ModelParams::init(
        &settings.architecture,
        &mut Rng::stream(settings.seed, crate::numerics::Stream::Init),
    )?;
    let (train_views, _) = data.gather(&indices.train);
    let (_, report) = pretrain_autoencoders(&train_views, model.encoders, &cfg, settings.seed)?;
    for (v, r) in report.views.iter().enumerate() {
        let drop = 100.0 * (1.0 - r.final_mse / r.initial_mse);
        println!(
            "view {v} ({}): reconstruction MSE {:.6} -> {:.6} ({drop:.1}% lower)",
            ds.views[v].name, r.initial_mse, r.final_mse
        );
    }
    if let Some(out) = &c.out {
        write_json(&report, &out.join("pretrain.json"))?;
    }
    Ok(())
}

fn synth_cmd(s: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        scheme: s.scheme,
        samples: s.n,
        views: s.views,
        classes: s.classes,
        dim: s.dim,
        noise: s.noise,
        shared: s.shared,
        seed: s.seed,
    };
    let ds = generate_synthetic(&spec)?;
    let manifest = write_dataset(&ds, &s.out)?;
    println!("wrote {} samples to {}", ds.len(), manifest.display());
    Ok(())
}

/// The fixed random instance checked by `gradcheck`: three views of widths
/// 5, 7 and 9, encoders 8/6/4, `d_s = 5`, `d_c = 3`, four classes, batch 4.
pub fn gradcheck_instance(kind: FusionKind, seed: u64) -> Result<(ModelParams, Vec<Matrix>, Vec<usize>)> {
    let arch = Architecture {
        view_dims: vec![5, 7, 9],
        encoder_widths: [8, 6, 4],
        fusion: kind,
        attention_units: 5,
        hops: 3,
        head_hidden: 16,
        classes: 4,
    };
    let mut rng = Rng::new(seed);
    let mut model = ModelParams::init(&arch, &mut rng)?;
    for t in model.tensors_mut() {
        for x in t.as_mut_slice() {
            *x += rng.uniform(-0.1, 0.1);
        }
    }
    let views = arch
        .view_dims
        .iter()
        .map(|&d| Matrix::from_fn(4, d, |_, _| rng.normal()))
        .collect();
    let labels = (0..4).map(|_| rng.below(4)).collect();
    Ok((model, views, labels))
}

pub fn gradcheck_random(kind: FusionKind, seed: u64) -> Result<(GradCheck, Vec<String>)> {
    let (model, views, labels) = gradcheck_instance(kind, seed)?;
    let check = check_gradients(
        &model,
        &views,
        &labels,
        &ObjectiveConfig::for_fusion(kind),
        crate::numerics::gradcheck::DEFAULT_EPS,
    )?;
    Ok((check, model.tensor_names()))
}

fn gradcheck_cmd(g: &GradcheckArgs) -> Result<()> {
    let (check, names) = gradcheck_random(g.fusion, g.seed)?;
    for (name, err) in names.iter().zip(&check.per_tensor) {
        println!("{name:<24} {err:.3e}");
    }
    println!("max relative error {:.3e}", check.max_rel_error);
    if check.max_rel_error >= GRADCHECK_TOLERANCE {
        return Err(Error::Usage(format!(
            "gradient check failed: {:.3e} >= {GRADCHECK_TOLERANCE:e}",
            check.max_rel_error
        )));
    }
    Ok(())
}

fn eval_cmd(e: &EvalArgs) -> Result<()> {
    let saved = load_model(&e.model)?;
    let ds = crate::data::load_dataset(&resolve_manifest(&e.data))?;
    saved.model.check_view_dims(&ds.view_dims())?;
    let ds = match &saved.normalization {
        Some(n) => n.apply(&ds)?,
        None => ds,
    };
    let all: Vec<usize> = (0..ds.len()).collect();
    let acc = evaluate(&saved.model, &ds, &all)?;
    println!("accuracy {acc:.4} on {} samples of {}", ds.len(), ds.name);
    Ok(())
}
