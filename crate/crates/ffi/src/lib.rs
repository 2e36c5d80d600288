//! C interface to `mvfuse`.
//!
//! Datasets and models are opaque handles owned by the caller and released
//! with the matching `_free` function. Every fallible call returns an
//! `MvfuseStatus`; on failure the message is available from
//! `mvfuse_last_error` on the same thread until the next failing call.
//!
//! Pointer arguments must be null or valid for the access described on each
//! function. Strings are NUL-terminated UTF-8.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use mvfuse::data::{generate_synthetic, load_dataset, MultiViewDataset, Scheme, SyntheticSpec};
use mvfuse::experiment::{load_model, run_experiment, run_once, save_model, ExperimentConfig, SavedModel, Settings};
use mvfuse::model::predict_proba;
use mvfuse::numerics::Matrix;
use mvfuse::training::evaluate;
use mvfuse::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MvfuseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Format = 5,
    Dataset = 6,
    Config = 7,
    Shape = 8,
    Panic = 9,
}

pub struct MvfuseDataset(MultiViewDataset);

pub struct MvfuseModel(SavedModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(MvfuseStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn status_of(e: &Error) -> MvfuseStatus {
    match e {
        Error::Shape { .. } | Error::ViewWidth { .. } | Error::ViewCount { .. } => MvfuseStatus::Shape,
        Error::Config(_) => MvfuseStatus::Config,
        Error::Dataset(_) => MvfuseStatus::Dataset,
        Error::Parse { .. } => MvfuseStatus::Parse,
        Error::Usage(_) => MvfuseStatus::InvalidArgument,
        Error::Format(_) => MvfuseStatus::Format,
        Error::Io { .. } => MvfuseStatus::Io,
        Error::Run { source, .. } => status_of(source),
    }
}

fn null(what: &str) -> Failure {
    Failure(MvfuseStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MvfuseStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MvfuseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MvfuseStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            MvfuseStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn dataset<'a>(p: *const MvfuseDataset) -> Result<&'a MultiViewDataset, Failure> {
    p.as_ref().map(|d| &d.0).ok_or_else(|| null("dataset"))
}

unsafe fn model<'a>(p: *const MvfuseModel) -> Result<&'a SavedModel, Failure> {
    p.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

fn settings(ds: &MultiViewDataset, config: Option<&str>, fusion: Option<&str>) -> Result<Settings, Failure> {
    let mut cfg = match config {
        Some(path) => ExperimentConfig::read(&PathBuf::from(path))?,
        None => ExperimentConfig::default(),
    };
    cfg.data = None;
    cfg.synthetic = None;
    if let Some(name) = fusion {
        cfg.fusion = Some(name.parse()?);
    }
    Ok(cfg.resolve(ds)?)
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mvfuse_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a dataset from a manifest file.
#[no_mangle]
pub unsafe extern "C" fn mvfuse_dataset_load(path: *const c_char, out_dataset: *mut *mut MvfuseDataset) -> MvfuseStatus {
    guard(|| {
        let slot = out(out_dataset, "out_dataset")?;
        let ds = load_dataset(&PathBuf::from(text(path, "path")?))?;
        *slot = Box::into_raw(Box::new(MvfuseDataset(ds)));
        Ok(())
    })
}

/// Generates a synthetic dataset. `scheme` is `"xor2"` or `"shared+specific"`;
/// `shared` only affects the latter.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mvfuse_dataset_synthetic(
    scheme: *const c_char,
    samples: usize,
    views: usize,
    classes: usize,
    dim: usize,
    noise: f64,
    shared: f64,
    seed: u64,
    out_dataset: *mut *mut MvfuseDataset,
) -> MvfuseStatus {
    guard(|| {
        let slot = out(out_dataset, "out_dataset")?;
        let scheme: Scheme = text(scheme, "scheme")?.parse()?;
        let spec = SyntheticSpec {
            scheme,
            samples,
            views,
            classes,
            dim,
            noise,
            shared,
            seed,
        };
        *slot = Box::into_raw(Box::new(MvfuseDataset(generate_synthetic(&spec)?)));
        Ok(())
    })
}

/// Number of samples; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn mvfuse_dataset_len(ds: *const MvfuseDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn mvfuse_dataset_num_views(ds: *const MvfuseDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.num_views())
}

#[no_mangle]
pub unsafe extern "C" fn mvfuse_dataset_num_classes(ds: *const MvfuseDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.num_classes)
}

/// Width of view `view`; 0 when out of range.
#[no_mangle]
pub unsafe extern "C" fn mvfuse_dataset_view_dim(ds: *const MvfuseDataset, view: usize) -> usize {
    ds.as_ref().and_then(|d| d.0.views.get(view)).map_or(0, |v| v.dim())
}

#[no_mangle]
pub unsafe extern "C" fn mvfuse_dataset_free(ds: *mut MvfuseDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Runs the full protocol and writes mean and standard deviation of the test
/// accuracy. `config_path` (a TOML experiment config) and `fusion` may be
/// null; the dataset comes from `ds` either way.
#[no_mangle]
pub unsafe extern "C" fn mvfuse_bench(
    ds: *const MvfuseDataset,
    config_path: *const c_char,
    fusion: *const c_char,
    out_mean: *mut f64,
    out_std: *mut f64,
) -> MvfuseStatus {
    guard(|| {
        let ds = dataset(ds)?;
        let mean = out(out_mean, "out_mean")?;
        let std = out(out_std, "out_std")?;
        let s = settings(ds, optional_text(config_path, "config_path")?, optional_text(fusion, "fusion")?)?;
        let report = run_experiment(ds, &s)?;
        *mean = report.mean;
        *std = report.std;
        Ok(())
    })
}

/// Trains one run (seed = configured seed + `run`) and returns the selected
/// model together with its normalization.
#[no_mangle]
pub unsafe extern "C" fn mvfuse_train(
    ds: *const MvfuseDataset,
    config_path: *const c_char,
    fusion: *const c_char,
    run: usize,
    out_model: *mut *mut MvfuseModel,
) -> MvfuseStatus {
    guard(|| {
        let ds = dataset(ds)?;
        let slot = out(out_model, "out_model")?;
        let s = settings(ds, optional_text(config_path, "config_path")?, optional_text(fusion, "fusion")?)?;
        let trained = run_once(ds, &s, run)?;
        let saved = SavedModel::new(ds.name.clone(), trained.model, Some(trained.normalization));
        *slot = Box::into_raw(Box::new(MvfuseModel(saved)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mvfuse_model_load(path: *const c_char, out_model: *mut *mut MvfuseModel) -> MvfuseStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        let saved = load_model(&PathBuf::from(text(path, "path")?))?;
        *slot = Box::into_raw(Box::new(MvfuseModel(saved)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mvfuse_model_save(m: *const MvfuseModel, path: *const c_char) -> MvfuseStatus {
    guard(|| {
        let saved = model(m)?;
        save_model(saved, &PathBuf::from(text(path, "path")?))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mvfuse_model_num_views(m: *const MvfuseModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.model.views())
}

#[no_mangle]
pub unsafe extern "C" fn mvfuse_model_num_classes(m: *const MvfuseModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.model.classes())
}

#[no_mangle]
pub unsafe extern "C" fn mvfuse_model_view_dim(m: *const MvfuseModel, view: usize) -> usize {
    m.as_ref()
        .and_then(|m| m.0.model.view_dims().get(view).copied())
        .unwrap_or(0)
}

/// Class probabilities for `rows` samples of raw (unnormalized) features.
/// `views` holds one pointer per model view to a row-major
/// `rows × view_dim` block; `out` receives `rows × num_classes` values and
/// must have room for `out_len >= rows * num_classes`.
#[no_mangle]
pub unsafe extern "C" fn mvfuse_model_predict(
    m: *const MvfuseModel,
    views: *const *const f64,
    rows: usize,
    out: *mut f64,
    out_len: usize,
) -> MvfuseStatus {
    guard(|| {
        let saved = model(m)?;
        if views.is_null() {
            return Err(null("views"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dims = saved.model.view_dims();
        let classes = saved.model.classes();
        let need = rows
            .checked_mul(classes)
            .ok_or_else(|| invalid("rows * num_classes overflows"))?;
        if out_len < need {
            return Err(invalid(format!("out_len {out_len} < {need}")));
        }
        let mut inputs = Vec::with_capacity(dims.len());
        for (v, &dim) in dims.iter().enumerate() {
            let p = *views.add(v);
            if p.is_null() {
                return Err(null(&format!("views[{v}]")));
            }
            let len = rows.checked_mul(dim).ok_or_else(|| invalid("rows * view_dim overflows"))?;
            let data = std::slice::from_raw_parts(p, len).to_vec();
            inputs.push(Matrix::new(rows, dim, data)?);
        }
        if let Some(norm) = &saved.normalization {
            norm.apply_views(&mut inputs)?;
        }
        let probs = predict_proba(&saved.model, &inputs)?;
        std::slice::from_raw_parts_mut(out, need).copy_from_slice(probs.as_slice());
        Ok(())
    })
}

/// Accuracy over every sample of `ds`, normalized with the model's statistics.
#[no_mangle]
pub unsafe extern "C" fn mvfuse_model_evaluate(
    m: *const MvfuseModel,
    ds: *const MvfuseDataset,
    out_accuracy: *mut f64,
) -> MvfuseStatus {
    guard(|| {
        let saved = model(m)?;
        let ds = dataset(ds)?;
        let acc = out(out_accuracy, "out_accuracy")?;
        saved.model.check_view_dims(&ds.view_dims())?;
        let normalized;
        let data = match &saved.normalization {
            Some(n) => {
                normalized = n.apply(ds)?;
                &normalized
            }
            None => ds,
        };
        let all: Vec<usize> = (0..data.len()).collect();
        *acc = evaluate(&saved.model, data, &all)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mvfuse_model_free(m: *mut MvfuseModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
