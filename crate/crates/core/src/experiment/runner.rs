//! Repeated runs, aggregation and fusion-strategy comparison.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::data::{normalize, split, MultiViewDataset, Normalization, SplitIndices};
use crate::error::{Error, Result};
use crate::experiment::config::Settings;
use crate::experiment::presets::preset;
use crate::model::{EncoderParams, FusionKind, ModelParams};
use crate::numerics::{Rng, Stream};
use crate::training::{evaluate, pretrain_autoencoders, train, EpochRecord, PretrainReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub test_accuracy: f64,
    pub best_epoch: Option<usize>,
    pub split_sizes: [usize; 3],
    pub pretrain: Option<PretrainReport>,
    pub curves: Vec<EpochRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub settings: Settings,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; zero when only one run was made.
    pub std: f64,
    pub single_run: bool,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunResult>,
}

/// Mean and `n − 1` standard deviation; the deviation of one value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Everything one run produces besides its summary.
pub struct TrainedRun {
    pub result: RunResult,
    pub model: ModelParams,
    pub normalization: Normalization,
    pub split: SplitIndices,
}

/// The fusion-independent part of a run: split, normalization and the
/// (optionally pretrained) encoders. Encoders are drawn before any fusion
/// parameters, so one preparation serves every strategy.
pub struct PreparedRun {
    pub seed: u64,
    pub split: SplitIndices,
    pub data: MultiViewDataset,
    pub normalization: Normalization,
    pub encoders: Vec<EncoderParams>,
    pub pretrain: Option<PretrainReport>,
}

pub fn prepare_run(ds: &MultiViewDataset, settings: &Settings, run: usize) -> Result<PreparedRun> {
    let seed = settings.run_seed(run);
    let indices = split(&ds.labels, ds.num_classes, seed)?;
    let (data, normalization) = normalize(ds, &indices.train)?;
    let model = ModelParams::init(&settings.architecture, &mut Rng::stream(seed, Stream::Init))?;
    let (encoders, pretrain) = match &settings.pretrain {
        Some(cfg) => {
            let (train_views, _) = data.gather(&indices.train);
            let (encoders, report) = pretrain_autoencoders(&train_views, model.encoders, cfg, seed)?;
            (encoders, Some(report))
        }
        None => (model.encoders, None),
    };
    Ok(PreparedRun {
        seed,
        split: indices,
        data,
        normalization,
        encoders,
        pretrain,
    })
}

/// Trains and tests the strategy of `settings` on a prepared run.
pub fn finish_run(prepared: &PreparedRun, settings: &Settings, run: usize) -> Result<TrainedRun> {
    let seed = prepared.seed;
    let mut model = ModelParams::init(&settings.architecture, &mut Rng::stream(seed, Stream::Init))?;
    model.encoders = prepared.encoders.clone();
    let outcome = train(model, &prepared.data, &prepared.split, &settings.training, seed)?;
    let test_accuracy = evaluate(&outcome.model, &prepared.data, &prepared.split.test)?;
    log::info!(
        "{} run {run} (seed {seed}): test accuracy {test_accuracy:.4}",
        settings.architecture.fusion
    );
    let s = &prepared.split;
    Ok(TrainedRun {
        result: RunResult {
            run,
            seed,
            test_accuracy,
            best_epoch: outcome.best_epoch,
            split_sizes: [s.train.len(), s.validation.len(), s.test.len()],
            pretrain: prepared.pretrain.clone(),
            curves: outcome.curves,
        },
        model: outcome.model,
        normalization: prepared.normalization.clone(),
        split: prepared.split.clone(),
    })
}

/// Split, normalize, optionally pretrain, train and test with seed `seed + run`.
pub fn run_once(ds: &MultiViewDataset, settings: &Settings, run: usize) -> Result<TrainedRun> {
    finish_run(&prepare_run(ds, settings, run)?, settings, run)
}

fn tag(run: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Run {
        run,
        source: Box::new(e),
    }
}

/// Runs the protocol `settings.runs` times with seeds `seed + r`.
pub fn run_experiment(ds: &MultiViewDataset, settings: &Settings) -> Result<RunReport> {
    settings.validate()?;
    let mut runs = Vec::with_capacity(settings.runs);
    for r in 0..settings.runs {
        runs.push(run_once(ds, settings, r).map_err(tag(r))?.result);
    }
    Ok(summarize(settings, runs))
}

pub fn summarize(settings: &Settings, runs: Vec<RunResult>) -> RunReport {
    let accuracies: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
    let (mean, std) = mean_std(&accuracies);
    RunReport {
        settings: settings.clone(),
        mean,
        std,
        single_run: accuracies.len() == 1,
        seeds: runs.iter().map(|r| r.seed).collect(),
        accuracies,
        runs,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub dataset: String,
    /// One report per strategy, in [`FusionKind::ALL`] order.
    pub reports: Vec<RunReport>,
}

/// Runs every fusion strategy with the same seeds, hence the same splits
/// and pretrained encoders. The penalty weight of `settings` is kept for
/// self-attention only. Equal to calling [`run_experiment`] per strategy.
pub fn compare_fusions(ds: &MultiViewDataset, settings: &Settings) -> Result<Comparison> {
    settings.validate()?;
    let lambda = match settings.architecture.fusion {
        FusionKind::SelfAttention => settings.training.objective.lambda,
        _ => crate::training::DEFAULT_LAMBDA,
    };
    let per_kind: Vec<Settings> = FusionKind::ALL.iter().map(|&k| settings.with_fusion(k, lambda)).collect();
    let mut results: Vec<Vec<RunResult>> = vec![Vec::with_capacity(settings.runs); per_kind.len()];
    for r in 0..settings.runs {
        let prepared = prepare_run(ds, settings, r).map_err(tag(r))?;
        for (s, out) in per_kind.iter().zip(&mut results) {
            out.push(finish_run(&prepared, s, r).map_err(tag(r))?.result);
        }
    }
    Ok(Comparison {
        dataset: ds.name.clone(),
        reports: per_kind.iter().zip(results).map(|(s, runs)| summarize(s, runs)).collect(),
    })
}

impl Comparison {
    /// Accuracy table in percent, with published numbers when the dataset
    /// has a preset.
    pub fn table(&self) -> String {
        let reference = preset(&self.dataset);
        let mut out = String::new();
        let _ = write!(out, "{:<16} {:>16}", "Method", format!("{} (%)", self.dataset));
        if reference.is_some() {
            let _ = write!(out, " {:>14}", "reference");
        }
        out.push('\n');
        for r in &self.reports {
            let kind = r.settings.architecture.fusion;
            let cell = format!("{:.1} ± {:.1}", 100.0 * r.mean, 100.0 * r.std);
            let _ = write!(out, "{:<16} {:>16}", kind.title(), cell);
            if let Some(p) = reference {
                let (m, s) = p.reference_for(kind);
                let _ = write!(out, " {:>14}", format!("{m:.1} ± {s:.1}"));
            }
            out.push('\n');
        }
        out
    }
}
