//! Experiment configuration: a TOML file of optional keys, resolved against
//! the dataset preset and then the generic defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{generate_synthetic, load_dataset, MultiViewDataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::experiment::presets::{preset, Preset};
use crate::model::params::validate_widths;
use crate::model::{Architecture, FusionKind};
use crate::training::{AdamConfig, ObjectiveConfig, PretrainConfig, ScheduleConfig, TrainingConfig};

pub const DEFAULT_WIDTHS: [usize; 3] = [64, 32, 16];
pub const DEFAULT_ATTENTION_UNITS: usize = 300;
pub const DEFAULT_HEAD_HIDDEN: usize = 512;
pub const DEFAULT_BATCH: usize = 16;
pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_DROPOUT: f64 = 0.5;
pub const DEFAULT_RUNS: usize = 10;

/// Contents of a config file. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset manifest, relative to the config file.
    pub data: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    /// Preset name; defaults to the dataset name.
    pub preset: Option<String>,
    pub fusion: Option<FusionKind>,
    pub encoder_widths: Option<[usize; 3]>,
    pub attention_units: Option<usize>,
    pub hops: Option<usize>,
    pub head_hidden: Option<usize>,
    pub lambda: Option<f64>,
    pub lr: Option<f64>,
    pub lr_decay: Option<f64>,
    pub lr_patience: Option<usize>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub dropout: Option<f64>,
    pub pretrain: Option<bool>,
    pub pretrain_epochs: Option<usize>,
    pub pretrain_lr: Option<f64>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1),
            msg: e.message().to_string(),
        })?;
        if let (Some(data), Some(dir)) = (&cfg.data, path.parent()) {
            cfg.data = Some(dir.join(data));
        }
        Ok(cfg)
    }

    /// Loads or generates the configured dataset.
    pub fn dataset(&self) -> Result<MultiViewDataset> {
        match (&self.data, &self.synthetic) {
            (Some(_), Some(_)) => Err(Error::config("set either `data` or `synthetic`, not both")),
            (Some(path), None) => load_dataset(path),
            (None, Some(spec)) => generate_synthetic(spec),
            (None, None) => Err(Error::config("no dataset: set `data` (a manifest) or `synthetic`")),
        }
    }

    /// Fills unset keys from the preset matching `ds` and the defaults.
    pub fn resolve(&self, ds: &MultiViewDataset) -> Result<Settings> {
        let preset: Option<&Preset> = match &self.preset {
            Some(name) => Some(preset(name).ok_or_else(|| Error::config(format!("unknown preset `{name}`")))?),
            None => preset(&ds.name),
        };
        let fusion = self.fusion.unwrap_or(FusionKind::SelfAttention);
        let lambda = match (fusion, self.lambda) {
            (FusionKind::SelfAttention, l) => l.unwrap_or(ObjectiveConfig::default().lambda),
            (_, Some(l)) if l != 0.0 => {
                log::warn!("lambda = {l} ignored: the {fusion} baseline has no attention penalty");
                0.0
            }
            _ => 0.0,
        };
        let schedule = ScheduleConfig {
            initial_lr: self.lr.unwrap_or(ScheduleConfig::default().initial_lr),
            factor: self.lr_decay.unwrap_or(ScheduleConfig::default().factor),
            patience: self.lr_patience.unwrap_or(ScheduleConfig::default().patience),
            ..ScheduleConfig::default()
        };
        let batch_size = self.batch_size.or(preset.map(|p| p.batch_size)).unwrap_or(DEFAULT_BATCH);
        let pretrain = self.pretrain.unwrap_or(true).then(|| PretrainConfig {
            epochs: self.pretrain_epochs.unwrap_or(PretrainConfig::default().epochs),
            lr: self.pretrain_lr.unwrap_or(PretrainConfig::default().lr),
            batch_size,
        });
        let settings = Settings {
            dataset: ds.name.clone(),
            preset: preset.map(|p| p.name.to_string()),
            architecture: Architecture {
                view_dims: ds.view_dims(),
                encoder_widths: self
                    .encoder_widths
                    .or(preset.map(|p| p.encoder_widths))
                    .unwrap_or(DEFAULT_WIDTHS),
                fusion,
                attention_units: self.attention_units.unwrap_or(DEFAULT_ATTENTION_UNITS),
                hops: self.hops.or(preset.map(|p| p.hops)).unwrap_or(ds.num_views()),
                head_hidden: self.head_hidden.unwrap_or(DEFAULT_HEAD_HIDDEN),
                classes: ds.num_classes,
            },
            training: TrainingConfig {
                epochs: self.epochs.unwrap_or(DEFAULT_EPOCHS),
                batch_size,
                dropout: self.dropout.unwrap_or(DEFAULT_DROPOUT),
                objective: ObjectiveConfig { lambda },
                schedule,
                adam: AdamConfig::default(),
            },
            pretrain,
            runs: self.runs.unwrap_or(DEFAULT_RUNS),
            seed: self.seed.unwrap_or(0),
        };
        settings.validate()?;
        Ok(settings)
    }
}

/// Fully resolved experiment settings, echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub dataset: String,
    pub preset: Option<String>,
    pub architecture: Architecture,
    pub training: TrainingConfig,
    pub pretrain: Option<PretrainConfig>,
    pub runs: usize,
    pub seed: u64,
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        validate_widths(self.architecture.encoder_widths)?;
        self.architecture.validate()?;
        self.training.validate(self.architecture.fusion)?;
        if let Some(p) = &self.pretrain {
            p.validate()?;
        }
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        Ok(())
    }

    /// The same settings with another fusion strategy and its default penalty.
    pub fn with_fusion(&self, kind: FusionKind, lambda: f64) -> Settings {
        let mut s = self.clone();
        s.architecture.fusion = kind;
        s.training.objective.lambda = if kind == FusionKind::SelfAttention { lambda } else { 0.0 };
        s
    }

    /// Seed of run `r`.
    pub fn run_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}
