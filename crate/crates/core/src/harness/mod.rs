//! Experiment harness: configuration, the three-stage pipeline, CSV and
//! filter-state emitters, metrics and the `mvanc` command line.

pub mod cli;
pub mod config;
pub mod emit;
pub mod pipeline;
pub mod report;
pub mod state;

pub use cli::cli_main;
pub use config::ExperimentConfig;
pub use pipeline::{run_pipeline, run_pipeline_with, Experiment, RunOptions};
pub use report::{SimulationReport, StageTraces};
