use super::engine::FxlmsEngine;
use super::{AuxiliaryFilterBank, ControlFilterMatrix, StageConfig, StageResult};
use crate::dsp::fir_filter_unchecked;
use crate::error::{Error, Result};
use crate::paths::SystemGeometry;
use crate::signals::PrecomputedSignals;

/// Tuning-stage multichannel FxLMS on the virtual microphones.
///
/// Starts from zero filters and returns the adapted filters with the
/// virtual-microphone error trace `e_v`.
pub fn tune_control_filters(
    pre: &PrecomputedSignals,
    geometry: &SystemGeometry,
    cfg: &StageConfig,
) -> Result<StageResult<ControlFilterMatrix>> {
    pre.check_geometry(geometry)?;
    cfg.check(pre.num_samples())?;
    let mut engine = FxlmsEngine::new(
        &pre.fxref_virt,
        &pre.dist_virt,
        ControlFilterMatrix::zeros(geometry),
        cfg.step_size,
        "tuning step size (mu1)",
        cfg.num_iterations,
    );
    for n in 0..cfg.num_iterations {
        engine.step(n)?;
    }
    let traces = std::mem::take(&mut engine.traces);
    Ok(StageResult {
        filters: engine.into_weights(),
        error_traces: traces,
        monitor_traces: None,
    })
}

/// Control-stage run that can be advanced one sample at a time.
///
/// The physical microphones are adapted toward the auxiliary-filter
/// prediction `Σ_r h_mr ∗ x_r`; the virtual-microphone errors are recorded
/// for monitoring only.
pub struct ControlStageRun<'a> {
    engine: FxlmsEngine<'a>,
    next: usize,
    total: usize,
}

impl<'a> ControlStageRun<'a> {
    pub fn new(
        pre: &'a PrecomputedSignals,
        h_opt: &AuxiliaryFilterBank,
        geometry: &SystemGeometry,
        cfg: &StageConfig,
    ) -> Result<Self> {
        pre.check_geometry(geometry)?;
        cfg.check(pre.num_samples())?;
        if !h_opt.matches(geometry) {
            return Err(Error::invalid("auxiliary filters do not match the system geometry"));
        }
        let target = auxiliary_prediction(pre, h_opt);
        let engine = FxlmsEngine::new(
            &pre.fxref_phys,
            &pre.dist_phys,
            ControlFilterMatrix::zeros(geometry),
            cfg.step_size,
            "control step size (mu3)",
            cfg.num_iterations,
        )
        .with_target(target)
        .with_monitor(&pre.fxref_virt, &pre.dist_virt, cfg.num_iterations);
        Ok(Self {
            engine,
            next: 0,
            total: cfg.num_iterations,
        })
    }

    /// Replaces the zero initial filters (warm start). Only valid before the
    /// first step.
    pub fn with_initial(mut self, initial: ControlFilterMatrix) -> Result<Self> {
        if self.next != 0 {
            return Err(Error::invalid("warm start must precede the first step"));
        }
        if initial.num_sources() != self.engine.weights().num_sources()
            || initial.num_refs() != self.engine.weights().num_refs()
            || initial.filter_len() != self.engine.weights().filter_len()
        {
            return Err(Error::invalid("initial control filters have the wrong shape"));
        }
        self.engine.set_weights(initial);
        Ok(self)
    }

    /// Advances one sample. Returns `false` once all samples are consumed.
    pub fn step(&mut self) -> Result<bool> {
        if self.next >= self.total {
            return Ok(false);
        }
        self.engine.step(self.next)?;
        self.next += 1;
        Ok(true)
    }

    pub fn weights(&self) -> &ControlFilterMatrix {
        self.engine.weights()
    }

    pub fn finish(mut self) -> Result<StageResult<ControlFilterMatrix>> {
        while self.step()? {}
        let traces = std::mem::take(&mut self.engine.traces);
        let monitor = self.engine.monitor_traces.take();
        Ok(StageResult {
            filters: self.engine.into_weights(),
            error_traces: traces,
            monitor_traces: monitor,
        })
    }
}

/// Control stage from zero filters. Returns the new filters, the physical
/// error trace `e_p` and (as `monitor_traces`) the virtual error trace.
pub fn run_control_stage(
    pre: &PrecomputedSignals,
    h_opt: &AuxiliaryFilterBank,
    geometry: &SystemGeometry,
    cfg: &StageConfig,
) -> Result<StageResult<ControlFilterMatrix>> {
    ControlStageRun::new(pre, h_opt, geometry, cfg)?.finish()
}

/// `[m][n] = Σ_r (h_mr ∗ x_r)[n]`.
fn auxiliary_prediction(pre: &PrecomputedSignals, h: &AuxiliaryFilterBank) -> Vec<Vec<f64>> {
    (0..h.num_mics())
        .map(|m| {
            let mut acc = fir_filter_unchecked(h.filter(m, 0), &pre.references[0]);
            for r in 1..h.num_refs() {
                let y = fir_filter_unchecked(h.filter(m, r), &pre.references[r]);
                for (a, v) in acc.iter_mut().zip(y) {
                    *a += v;
                }
            }
            acc
        })
        .collect()
}
