//! Manifest-driven dataset loading and writing.
//!
//! A manifest is a TOML file:
//!
//! ```toml
//! name = "leaves"
//! classes = 6
//! labels = "labels.txt"
//!
//! [[views]]
//! name = "shape"
//! path = "shape.csv"
//! dim = 64
//! ```
//!
//! Paths are relative to the manifest's directory. View files hold one
//! sample per row, comma- or whitespace-separated, with an optional
//! non-numeric header line. Label files hold one 0-based integer per line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{MultiViewDataset, View};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub classes: usize,
    pub labels: PathBuf,
    pub views: Vec<ManifestView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestView {
    pub name: String,
    pub path: PathBuf,
    pub dim: usize,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| line_of(&text, s.start)),
            msg: e.message().to_string(),
        })
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn split_cells(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Reads a delimited numeric table with `dim` columns.
pub fn read_view_file(path: &Path, dim: usize) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    let mut rows = 0;
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cells = split_cells(line);
        let parsed: Vec<_> = cells.iter().map(|c| c.parse::<f64>()).collect();
        if first && parsed.iter().any(|p| p.is_err()) {
            first = false;
            continue;
        }
        first = false;
        if cells.len() != dim {
            return Err(parse_error(
                path,
                i + 1,
                format!("expected {dim} columns, found {}", cells.len()),
            ));
        }
        for (cell, value) in cells.iter().zip(parsed) {
            match value {
                Ok(v) if v.is_finite() => data.push(v),
                _ => return Err(parse_error(path, i + 1, format!("non-numeric cell `{cell}`"))),
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(parse_error(path, 0, "no data rows"));
    }
    Matrix::new(rows, dim, data)
}

/// Reads one 0-based label per line and checks the range `0..classes`.
pub fn read_label_file(path: &Path, classes: usize) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let y: usize = line
            .parse()
            .map_err(|_| parse_error(path, i + 1, format!("label `{line}` is not a non-negative integer")))?;
        if y >= classes {
            return Err(parse_error(
                path,
                i + 1,
                format!("label {y} out of range (valid labels 0..{})", classes - 1),
            ));
        }
        labels.push(y);
    }
    Ok(labels)
}

/// Loads and validates the dataset described by a manifest.
pub fn load_dataset(manifest_path: &Path) -> Result<MultiViewDataset> {
    let manifest = Manifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    if manifest.views.len() < 2 {
        return Err(parse_error(
            manifest_path,
            0,
            format!("at least two views are required, found {}", manifest.views.len()),
        ));
    }
    if manifest.classes < 2 {
        return Err(parse_error(manifest_path, 0, "at least two classes are required"));
    }
    let label_path = base.join(&manifest.labels);
    let labels = read_label_file(&label_path, manifest.classes)?;
    let mut views = Vec::with_capacity(manifest.views.len());
    for mv in &manifest.views {
        let path = base.join(&mv.path);
        let features = read_view_file(&path, mv.dim)?;
        if features.rows() != labels.len() {
            return Err(Error::Dataset(format!(
                "{} has {} rows but {} has {} labels",
                path.display(),
                features.rows(),
                label_path.display(),
                labels.len()
            )));
        }
        views.push(View {
            name: mv.name.clone(),
            features,
        });
    }
    MultiViewDataset::new(manifest.name, manifest.classes, views, labels)
}

/// Writes `ds` as a manifest plus one CSV per view and a label file.
/// Returns the manifest path.
pub fn write_dataset(ds: &MultiViewDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest {
        name: ds.name.clone(),
        classes: ds.num_classes,
        labels: PathBuf::from("labels.txt"),
        views: Vec::new(),
    };
    for (v, view) in ds.views.iter().enumerate() {
        let file = PathBuf::from(format!("view{v}.csv"));
        let path = dir.join(&file);
        let mut out = String::new();
        for r in 0..view.features.rows() {
            let row: Vec<String> = view.features.row(r).iter().map(f64::to_string).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
        manifest.views.push(ManifestView {
            name: view.name.clone(),
            path: file,
            dim: view.dim(),
        });
    }
    let label_path = dir.join(&manifest.labels);
    let mut f = fs::File::create(&label_path).map_err(|e| Error::io(&label_path, e))?;
    for y in &ds.labels {
        writeln!(f, "{y}").map_err(|e| Error::io(&label_path, e))?;
    }
    let manifest_path = dir.join("manifest.toml");
    let text = toml::to_string(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}
