//! Simulation toolkit for feedforward multichannel virtual-sensing active
//! noise control.
//!
//! A tuning stage trains control filters against microphones placed at the
//! virtual locations and then trains auxiliary filters that predict the
//! physical-microphone residual left by those filters. A control stage
//! re-trains the control filters from the physical microphones alone,
//! using the auxiliary prediction as the error target.
//!
//! Module map:
//! - [`dsp`]: FIR filtering, bandpass design, frequency response, smoothed dB
//! - [`paths`]: plant geometry, path sets, synthesis and the path file format
//! - [`signals`]: seeded noise and filtered-reference precomputation
//! - [`kernels`]: the three adaptive stages
//! - [`harness`]: configuration, pipeline orchestration, emitters and CLI

pub mod dsp;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod paths;
pub mod rng;
pub mod signals;
mod textfmt;

pub use error::{Error, Result, Stage};
pub use kernels::{
    lms_step, run_control_stage, train_auxiliary_filters, tune_control_filters,
    AuxiliaryFilterBank, ControlFilterMatrix, ControlStageRun, StageConfig, StageResult,
};
pub use paths::{PathSet, SystemGeometry};
pub use signals::{NoiseSpec, PrecomputedSignals};
