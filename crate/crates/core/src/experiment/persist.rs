//! Curve files, model files and JSON reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::Normalization;
use crate::error::{Error, Result};
use crate::experiment::runner::RunReport;
use crate::model::ModelParams;
use crate::training::EpochRecord;

pub const MODEL_FORMAT: &str = "mvfuse-model";
pub const MODEL_VERSION: u32 = 1;

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: e.to_string(),
    }
}

pub fn write_curve_file(path: &Path, records: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    if records.is_empty() {
        w.write_record([
            "epoch",
            "train_total_loss",
            "train_ce",
            "train_penalty",
            "val_acc",
            "test_acc",
            "lr",
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    for r in records {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curve_file(path: &Path) -> Result<Vec<EpochRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|rec| rec.map_err(|e| csv_error(path, e))).collect()
}

/// Per-epoch means across runs, over the epochs every run reached.
pub fn mean_curve(report: &RunReport) -> Vec<EpochRecord> {
    let epochs = report.runs.iter().map(|r| r.curves.len()).min().unwrap_or(0);
    let n = report.runs.len() as f64;
    (0..epochs)
        .map(|e| {
            let mean = |f: fn(&EpochRecord) -> f64| report.runs.iter().map(|r| f(&r.curves[e])).sum::<f64>() / n;
            EpochRecord {
                epoch: e + 1,
                train_total_loss: mean(|c| c.train_total_loss),
                train_ce: mean(|c| c.train_ce),
                train_penalty: mean(|c| c.train_penalty),
                val_acc: mean(|c| c.val_acc),
                test_acc: mean(|c| c.test_acc),
                lr: mean(|c| c.lr),
            }
        })
        .collect()
}

/// Writes `run_<r>.csv` per run and `mean.csv`; returns the paths written.
pub fn emit_curves(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.runs.is_empty() {
        return Err(Error::Usage("report has no runs".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(report.runs.len() + 1);
    for run in &report.runs {
        let path = dir.join(format!("run_{}.csv", run.run));
        write_curve_file(&path, &run.curves)?;
        written.push(path);
    }
    let path = dir.join("mean.csv");
    write_curve_file(&path, &mean_curve(report))?;
    written.push(path);
    Ok(written)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })
}

/// A trained model with the statistics its inputs must be normalized by.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub model: ModelParams,
    pub normalization: Option<Normalization>,
}

impl SavedModel {
    pub fn new(dataset: impl Into<String>, model: ModelParams, normalization: Option<Normalization>) -> Self {
        SavedModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            dataset: dataset.into(),
            model,
            normalization,
        }
    }
}

pub fn save_model(saved: &SavedModel, path: &Path) -> Result<()> {
    write_json(saved, path)
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let format = value.get("format").and_then(|f| f.as_str());
    if format != Some(MODEL_FORMAT) {
        return Err(Error::Format(format!("{} is not a {MODEL_FORMAT} file", path.display())));
    }
    let version = value.get("version").and_then(|v| v.as_u64());
    if version != Some(u64::from(MODEL_VERSION)) {
        return Err(Error::Format(format!(
            "{}: unsupported version {version:?}, expected {MODEL_VERSION}",
            path.display()
        )));
    }
    let saved: SavedModel =
        serde_json::from_value(value).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    saved.model.validate()?;
    if let Some(norm) = &saved.normalization {
        let dims: Vec<usize> = norm.views.iter().map(|v| v.mean.len()).collect();
        saved.model.check_view_dims(&dims).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(saved)
}
