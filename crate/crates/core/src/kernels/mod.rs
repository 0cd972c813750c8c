//! The three adaptive stages of the virtual-sensing pipeline.
//!
//! 1. [`tune_control_filters`]: multichannel FxLMS driving the virtual
//!    microphone errors to a minimum, giving the optimal control filters.
//! 2. [`train_auxiliary_filters`]: per-microphone LMS that learns to predict
//!    the physical residual left by the frozen optimal control filters from
//!    the reference signals alone.
//! 3. [`run_control_stage`]: multichannel FxLMS on the physical microphones,
//!    steering their residual toward the auxiliary-filter prediction so that
//!    the virtual locations end up quiet.
//!
//! Every stage uses the error convention `e = d − FX·w` with the additive
//! update `w ← w + μ·FXᵀ·e`. Within a sample all errors are computed before
//! any filter changes. Inner products accumulate in ascending tap order
//! (sources, then references, then taps) and cross-microphone sums in
//! ascending microphone order, so results are bit-reproducible.

mod auxiliary;
mod engine;
mod stages;

pub use auxiliary::train_auxiliary_filters;
pub use stages::{run_control_stage, tune_control_filters, ControlStageRun};

use crate::error::{Error, Result};
use crate::paths::SystemGeometry;

/// `K × R` control filters of `L` taps, stored source-major so the stacked
/// `R·L` vector of source `k` is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFilterMatrix {
    num_sources: usize,
    num_refs: usize,
    len: usize,
    taps: Vec<f64>,
}

impl ControlFilterMatrix {
    pub fn zeros(geometry: &SystemGeometry) -> Self {
        Self::from_taps(
            geometry.num_sources,
            geometry.num_refs,
            geometry.control_len,
            vec![0.0; geometry.num_sources * geometry.num_refs * geometry.control_len],
        )
        .expect("shape is consistent by construction")
    }

    pub fn from_taps(num_sources: usize, num_refs: usize, len: usize, taps: Vec<f64>) -> Result<Self> {
        if num_sources == 0 || num_refs == 0 || len == 0 {
            return Err(Error::invalid("control filter dimensions must be non-zero"));
        }
        if taps.len() != num_sources * num_refs * len {
            return Err(Error::invalid(format!(
                "expected {} control taps, got {}",
                num_sources * num_refs * len,
                taps.len()
            )));
        }
        Ok(Self {
            num_sources,
            num_refs,
            len,
            taps,
        })
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn num_refs(&self) -> usize {
        self.num_refs
    }

    /// Taps per filter (`L`).
    pub fn filter_len(&self) -> usize {
        self.len
    }

    /// Filter from reference `r` to source `k`.
    pub fn filter(&self, k: usize, r: usize) -> &[f64] {
        let o = (k * self.num_refs + r) * self.len;
        &self.taps[o..o + self.len]
    }

    /// The `R·L` stacked vector of source `k`.
    pub fn stacked(&self, k: usize) -> &[f64] {
        let span = self.num_refs * self.len;
        &self.taps[k * span..(k + 1) * span]
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub(crate) fn taps_mut(&mut self) -> &mut [f64] {
        &mut self.taps
    }

    pub fn matches(&self, geometry: &SystemGeometry) -> bool {
        self.num_sources == geometry.num_sources
            && self.num_refs == geometry.num_refs
            && self.len == geometry.control_len
    }
}

/// `Mp × R` auxiliary filters of `Nh` taps, stored mic-major so the stacked
/// `R·Nh` vector of microphone `m` is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryFilterBank {
    num_mics: usize,
    num_refs: usize,
    len: usize,
    taps: Vec<f64>,
}

impl AuxiliaryFilterBank {
    pub fn zeros(geometry: &SystemGeometry) -> Self {
        Self::from_taps(
            geometry.num_phys,
            geometry.num_refs,
            geometry.aux_len,
            vec![0.0; geometry.num_phys * geometry.num_refs * geometry.aux_len],
        )
        .expect("shape is consistent by construction")
    }

    pub fn from_taps(num_mics: usize, num_refs: usize, len: usize, taps: Vec<f64>) -> Result<Self> {
        if num_mics == 0 || num_refs == 0 || len == 0 {
            return Err(Error::invalid("auxiliary filter dimensions must be non-zero"));
        }
        if taps.len() != num_mics * num_refs * len {
            return Err(Error::invalid(format!(
                "expected {} auxiliary taps, got {}",
                num_mics * num_refs * len,
                taps.len()
            )));
        }
        Ok(Self {
            num_mics,
            num_refs,
            len,
            taps,
        })
    }

    pub fn num_mics(&self) -> usize {
        self.num_mics
    }

    pub fn num_refs(&self) -> usize {
        self.num_refs
    }

    pub fn filter_len(&self) -> usize {
        self.len
    }

    /// Filter from reference `r` to physical microphone `m`.
    pub fn filter(&self, m: usize, r: usize) -> &[f64] {
        let o = (m * self.num_refs + r) * self.len;
        &self.taps[o..o + self.len]
    }

    pub fn stacked(&self, m: usize) -> &[f64] {
        let span = self.num_refs * self.len;
        &self.taps[m * span..(m + 1) * span]
    }

    pub(crate) fn stacked_mut(&mut self, m: usize) -> &mut [f64] {
        let span = self.num_refs * self.len;
        &mut self.taps[m * span..(m + 1) * span]
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn matches(&self, geometry: &SystemGeometry) -> bool {
        self.num_mics == geometry.num_phys
            && self.num_refs == geometry.num_refs
            && self.len == geometry.aux_len
    }
}

/// Step size and sample count for one stage run. A zero step size freezes
/// the filters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageConfig {
    pub step_size: f64,
    pub num_iterations: usize,
}

impl StageConfig {
    pub fn new(step_size: f64, num_iterations: usize) -> Self {
        Self {
            step_size,
            num_iterations,
        }
    }

    pub(crate) fn check(&self, available: usize) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size >= 0.0) {
            return Err(Error::invalid(format!(
                "step size must be finite and non-negative, got {}",
                self.step_size
            )));
        }
        if self.num_iterations == 0 {
            return Err(Error::invalid("a stage needs at least one iteration"));
        }
        if self.num_iterations > available {
            return Err(Error::invalid(format!(
                "{} iterations requested but only {available} samples are precomputed",
                self.num_iterations
            )));
        }
        Ok(())
    }
}

/// Converged filters plus per-microphone error traces (`[mic][n]`).
///
/// For the control stage `error_traces` are the physical-microphone errors
/// and `monitor_traces` the virtual-microphone errors. For the auxiliary
/// stage `error_traces` hold `e_h` and `monitor_traces` the physical
/// residual `e_p` it predicts.
#[derive(Debug, Clone, PartialEq)]
pub struct StageResult<F> {
    pub filters: F,
    pub error_traces: Vec<Vec<f64>>,
    pub monitor_traces: Option<Vec<Vec<f64>>>,
}

/// One LMS update: `state + step · error · window`.
pub fn lms_step(state: &[f64], window: &[f64], error: f64, step: f64) -> Result<Vec<f64>> {
    if state.len() != window.len() {
        return Err(Error::invalid(format!(
            "filter has {} taps but the reference window has {}",
            state.len(),
            window.len()
        )));
    }
    let scaled = step * error;
    Ok(state
        .iter()
        .zip(window)
        .map(|(w, x)| w + scaled * x)
        .collect())
}
