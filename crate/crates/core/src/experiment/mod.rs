//! Configuration, repeated-run benchmarking, strategy comparison, artifacts
//! and the command-line interface.

pub mod cli;
pub mod config;
pub mod persist;
pub mod presets;
pub mod runner;

pub use cli::cli_main;
pub use config::{ExperimentConfig, Settings};
pub use persist::{
    emit_curves, load_model, mean_curve, read_curve_file, read_report, save_model, write_curve_file, write_json,
    SavedModel,
};
pub use presets::{preset, Preset, PRESETS};
pub use runner::{
    compare_fusions, finish_run, mean_std, prepare_run, run_experiment, run_once, summarize, Comparison, PreparedRun,
    RunReport, RunResult, TrainedRun,
};
