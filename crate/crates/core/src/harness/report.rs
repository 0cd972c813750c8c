//! Metrics computed from the stage traces and filters, and the JSON report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::dsp::{freq_response, odd_window, smoothed_db_trace, POWER_FLOOR};
use crate::error::{Error, Result, Stage};
use crate::kernels::ControlFilterMatrix;

pub const REPORT_FORMAT: &str = "mvanc-report v1";

pub const CONVERGENCE_DEFINITION: &str = "toolkit-defined: first sample whose smoothed error level is \
     within 3 dB of the level at the last sample";

pub const OUT_OF_BAND_HZ: (f64, f64) = (3000.0, 8000.0);

/// All error traces of one experiment, `[mic][sample]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageTraces {
    /// Tuning stage, virtual microphones.
    pub tuning: Vec<Vec<f64>>,
    /// Auxiliary stage prediction error `e_h`, physical microphones.
    pub auxiliary: Vec<Vec<f64>>,
    /// Physical residual `e_p` under the frozen optimal control filters.
    pub auxiliary_residual: Vec<Vec<f64>>,
    /// Control stage, physical microphones.
    pub control_physical: Vec<Vec<f64>>,
    /// Control stage, virtual microphones (monitored only).
    pub control_virtual: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicLevels {
    pub mic: String,
    /// Smoothed level centred on the first full window.
    pub first_window_db: f64,
    /// Smoothed level centred on the last full window.
    pub last_window_db: f64,
    /// `first_window_db − last_window_db`.
    pub reduction_db: f64,
    /// Smoothed level at the last sample.
    pub final_db: f64,
    pub convergence_sample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLevels {
    pub stage: String,
    pub mics: Vec<MicLevels>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryFidelity {
    pub mic: String,
    /// Mean square of `e_p` over the final 10% of samples, in dB.
    pub residual_db: f64,
    /// Mean square of `e_h` over the same span, in dB.
    pub prediction_error_db: f64,
    /// `residual_db − prediction_error_db`.
    pub margin_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandComparison {
    pub in_band_hz: (f64, f64),
    pub out_of_band_hz: (f64, f64),
    /// `20·log10` of the mean linear magnitude over the band.
    pub in_band_db: f64,
    pub out_of_band_db: f64,
    pub margin_db: f64,
}

/// Passband shape of control filter (source 1, reference 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassbandMetrics {
    pub filter: String,
    pub tuning: BandComparison,
    pub control: BandComparison,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub format: String,
    pub num_samples: usize,
    pub smoothing_window: usize,
    pub convergence_definition: String,
    pub stages: Vec<StageLevels>,
    /// Control-stage reduction per virtual microphone.
    pub virtual_reduction_db: Vec<f64>,
    pub auxiliary_fidelity: Vec<AuxiliaryFidelity>,
    pub passband: PassbandMetrics,
    pub config: ExperimentConfig,
    /// Wall-clock seconds per stage. Kept out of the file so that reruns
    /// produce identical bytes.
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

impl SimulationReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report is always serializable");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("report", e.to_string()))
    }

    pub fn save(&self, destination: &Path) -> Result<()> {
        std::fs::write(destination, self.to_json()).map_err(|e| Error::io(destination, e))
    }

    pub fn stage(&self, name: &str) -> Option<&StageLevels> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

/// First/last full-window levels, reduction and convergence for one trace.
pub fn mic_levels(mic: String, errors: &[f64], window: usize) -> Result<MicLevels> {
    if errors.is_empty() {
        return Err(Error::invalid(format!("{mic}: empty error trace")));
    }
    let smoothed = smoothed_db_trace(errors, window)?;
    let len = smoothed.len();
    let half = ((odd_window(window) - 1) / 2).min(len - 1);
    let first = smoothed[half];
    let last = smoothed[len - 1 - half];
    let final_db = smoothed[len - 1];
    Ok(MicLevels {
        mic,
        first_window_db: first,
        last_window_db: last,
        reduction_db: first - last,
        final_db,
        convergence_sample: smoothed.iter().position(|v| (v - final_db).abs() <= 3.0),
    })
}

fn stage_levels(stage: &str, mic_prefix: &str, traces: &[Vec<f64>], window: usize) -> Result<StageLevels> {
    let mics = traces
        .iter()
        .enumerate()
        .map(|(i, t)| mic_levels(format!("{mic_prefix}{}", i + 1), t, window))
        .collect::<Result<Vec<_>>>()?;
    Ok(StageLevels {
        stage: stage.to_string(),
        mics,
    })
}

fn mean_square_db(values: &[f64]) -> f64 {
    let ms = values.iter().map(|v| v * v).sum::<f64>() / values.len().max(1) as f64;
    10.0 * ms.max(POWER_FLOOR).log10()
}

/// Compares `e_p` with `e_h` over the final 10% of samples.
pub fn auxiliary_fidelity(residual: &[Vec<f64>], prediction_error: &[Vec<f64>]) -> Result<Vec<AuxiliaryFidelity>> {
    if residual.len() != prediction_error.len() {
        return Err(Error::invalid("auxiliary traces differ in microphone count"));
    }
    residual
        .iter()
        .zip(prediction_error)
        .enumerate()
        .map(|(m, (ep, eh))| {
            if ep.len() != eh.len() || ep.is_empty() {
                return Err(Error::invalid("auxiliary traces differ in length"));
            }
            let start = ep.len() - (ep.len() / 10).max(1);
            let residual_db = mean_square_db(&ep[start..]);
            let prediction_error_db = mean_square_db(&eh[start..]);
            Ok(AuxiliaryFidelity {
                mic: format!("phys{}", m + 1),
                residual_db,
                prediction_error_db,
                margin_db: residual_db - prediction_error_db,
            })
        })
        .collect()
}

/// Mean-magnitude comparison of `taps` between two frequency bands.
pub fn band_comparison(
    taps: &[f64],
    in_band: (f64, f64),
    out_of_band: (f64, f64),
    fs: f64,
    n_points: usize,
) -> Result<BandComparison> {
    let response = freq_response(taps, n_points, fs)?;
    let mean_db = |(lo, hi): (f64, f64)| -> Result<f64> {
        let selected: Vec<f64> = response
            .frequencies
            .iter()
            .zip(&response.magnitude)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, m)| *m)
            .collect();
        if selected.is_empty() {
            return Err(Error::invalid(format!("no frequency points in {lo}–{hi} Hz")));
        }
        let mean = selected.iter().sum::<f64>() / selected.len() as f64;
        Ok(20.0 * mean.max(POWER_FLOOR).log10())
    };
    let in_band_db = mean_db(in_band)?;
    let out_of_band_db = mean_db(out_of_band)?;
    Ok(BandComparison {
        in_band_hz: in_band,
        out_of_band_hz: out_of_band,
        in_band_db,
        out_of_band_db,
        margin_db: in_band_db - out_of_band_db,
    })
}

/// Assembles the report. `w` and `wc` are the tuning and control-stage
/// control filters.
pub fn build_report(
    config: &ExperimentConfig,
    traces: &StageTraces,
    w: &ControlFilterMatrix,
    wc: &ControlFilterMatrix,
) -> Result<SimulationReport> {
    let window = config.smoothing_window;
    let stages = vec![
        stage_levels("tuning", "virt", &traces.tuning, window)?,
        stage_levels("auxiliary", "phys", &traces.auxiliary, window)?,
        stage_levels("auxiliary_residual", "phys", &traces.auxiliary_residual, window)?,
        stage_levels("control_physical", "phys", &traces.control_physical, window)?,
        stage_levels("control_virtual", "virt", &traces.control_virtual, window)?,
    ];
    let virtual_reduction_db = stages[4].mics.iter().map(|m| m.reduction_db).collect();
    let out = OUT_OF_BAND_HZ;
    let fs = config.fs;
    let tuning_band = (config.tuning_noise.band_lo, config.tuning_noise.band_hi);
    let control_band = (config.control_noise.band_lo, config.control_noise.band_hi);
    let passband = PassbandMetrics {
        filter: "s1_r1".into(),
        tuning: band_comparison(w.filter(0, 0), tuning_band, out, fs, config.freq_points)?,
        control: band_comparison(wc.filter(0, 0), control_band, out, fs, config.freq_points)?,
    };
    Ok(SimulationReport {
        format: REPORT_FORMAT.into(),
        num_samples: config.num_samples,
        smoothing_window: window,
        convergence_definition: CONVERGENCE_DEFINITION.into(),
        stages,
        virtual_reduction_db,
        auxiliary_fidelity: auxiliary_fidelity(&traces.auxiliary_residual, &traces.auxiliary)?,
        passband,
        config: config.clone(),
        timings: Vec::new(),
    })
}
