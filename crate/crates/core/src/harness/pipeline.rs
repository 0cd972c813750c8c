//! The three-stage experiment and its on-disk artifacts.
//!
//! `run_pipeline` and the single-stage entry points share the same stage
//! functions, so a full run and a `tune` → `aux` → `control` sequence write
//! identical files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::ExperimentConfig;
use super::emit::{dump_signals, emit_filter_report, emit_traces, read_traces};
use super::report::{build_report, SimulationReport, StageTiming, StageTraces};
use super::state::{auxiliary_filters_to_string, control_filters_to_string, load_filters};
use crate::error::{Error, Result, Stage};
use crate::kernels::{
    run_control_stage, train_auxiliary_filters, tune_control_filters, AuxiliaryFilterBank, ControlFilterMatrix,
    StageConfig,
};
use crate::paths::{ensure_valid, load_paths, save_paths, synth_paths, PathSet, SystemGeometry};
use crate::signals::{create_reference_signals, make_reference_signals, NoiseSpec, PrecomputedSignals};

/// Per-microphone error traces.
type Traces = Vec<Vec<f64>>;

/// Output file names inside the run directory.
pub mod files {
    pub const PATHS: &str = "paths.txt";
    pub const TUNING_FILTERS: &str = "tuning_filters.txt";
    pub const AUXILIARY_FILTERS: &str = "auxiliary_filters.txt";
    pub const CONTROL_FILTERS: &str = "control_filters.txt";
    pub const TRACE_TUNING: &str = "trace_tuning.csv";
    pub const TRACE_AUXILIARY: &str = "trace_auxiliary.csv";
    pub const TRACE_AUXILIARY_RESIDUAL: &str = "trace_auxiliary_residual.csv";
    pub const TRACE_CONTROL_PHYSICAL: &str = "trace_control_physical.csv";
    pub const TRACE_CONTROL_VIRTUAL: &str = "trace_control_virtual.csv";
    pub const FILTER_COEFFICIENTS: &str = "filter_coefficients.csv";
    pub const FILTER_RESPONSE: &str = "filter_response.csv";
    pub const REPORT: &str = "report.json";
    pub const FAILED: &str = "FAILED";
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Also write the precomputed signals of both stages as CSV.
    pub dump_signals: bool,
}

/// A validated config bound to its output directory and plant.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub paths: PathSet,
    options: RunOptions,
}

fn timed<T>(stage: Stage, timings: &mut Vec<StageTiming>, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let value = f().map_err(|e| e.in_stage(stage))?;
    timings.push(StageTiming {
        stage,
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(value)
}

fn write_text(destination: &Path, text: &str) -> Result<()> {
    std::fs::write(destination, text).map_err(|e| Error::io(destination, e))
}

/// Synthesizes or loads the plant described by the config.
pub fn resolve_paths(config: &ExperimentConfig) -> Result<PathSet> {
    let paths = match (&config.paths.file, config.paths.primary_len, config.paths.secondary_len) {
        (Some(file), _, _) => load_paths(file)?,
        (None, Some(lp), Some(ls)) => synth_paths(&config.geometry, lp, ls, config.path_seed())?,
        _ => return Err(Error::Config("paths: no file and no synthesis lengths".into())),
    };
    ensure_valid(&paths, &config.geometry)?;
    Ok(paths)
}

impl Experiment {
    /// Validates the config, creates the output directory, resolves the
    /// plant and writes it to `paths.txt`.
    pub fn prepare(config: &ExperimentConfig, options: RunOptions) -> Result<Self> {
        config.validate()?;
        let out_dir = config.out_dir();
        std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
        let paths = resolve_paths(config).map_err(|e| e.in_stage(Stage::Paths))?;
        save_paths(&paths, &out_dir.join(files::PATHS)).map_err(|e| e.in_stage(Stage::Paths))?;
        Ok(Self {
            config: config.clone(),
            out_dir,
            paths,
            options,
        })
    }

    /// Reopens a run directory, reading the plant back from `paths.txt`.
    pub fn resume(config: &ExperimentConfig, options: RunOptions) -> Result<Self> {
        config.validate()?;
        let out_dir = config.out_dir();
        let paths = load_paths(&out_dir.join(files::PATHS)).map_err(|e| e.in_stage(Stage::Paths))?;
        ensure_valid(&paths, &config.geometry).map_err(|e| e.in_stage(Stage::Paths))?;
        Ok(Self {
            config: config.clone(),
            out_dir,
            paths,
            options,
        })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn geometry(&self) -> &SystemGeometry {
        &self.config.geometry
    }

    fn signals(&self, spec: &NoiseSpec, prefix: &str) -> Result<PrecomputedSignals> {
        let refs = make_reference_signals(spec, self.config.fs, self.geometry().num_refs)?;
        let pre = create_reference_signals(&self.paths, &refs, self.geometry())?;
        if self.options.dump_signals {
            dump_signals(&pre, &self.out_dir, prefix)?;
        }
        Ok(pre)
    }

    pub fn tuning_signals(&self) -> Result<PrecomputedSignals> {
        self.signals(&self.config.tuning_noise_spec(), "signals_tuning")
    }

    pub fn control_signals(&self) -> Result<PrecomputedSignals> {
        self.signals(&self.config.control_noise_spec(), "signals_control")
    }

    /// Tuning stage (μ1); writes the filters and the virtual-mic trace.
    pub fn tune(&self, pre: &PrecomputedSignals) -> Result<(ControlFilterMatrix, Vec<Vec<f64>>)> {
        let cfg = StageConfig::new(self.config.step_sizes.tuning, self.config.num_samples);
        let result = tune_control_filters(pre, self.geometry(), &cfg)?;
        write_text(&self.file(files::TUNING_FILTERS), &control_filters_to_string(&result.filters))?;
        emit_traces(
            &result.error_traces,
            "tuning",
            "virt",
            self.config.smoothing_window,
            &self.file(files::TRACE_TUNING),
        )?;
        Ok((result.filters, result.error_traces))
    }

    /// Auxiliary stage (μ2); returns the bank, `e_h` and `e_p`.
    pub fn train_auxiliary(
        &self,
        pre: &PrecomputedSignals,
        w_opt: &ControlFilterMatrix,
    ) -> Result<(AuxiliaryFilterBank, Traces, Traces)> {
        let cfg = StageConfig::new(self.config.step_sizes.auxiliary, self.config.num_samples);
        let result = train_auxiliary_filters(pre, w_opt, self.geometry(), &cfg)?;
        let residual = result.monitor_traces.unwrap_or_default();
        let window = self.config.smoothing_window;
        write_text(&self.file(files::AUXILIARY_FILTERS), &auxiliary_filters_to_string(&result.filters))?;
        emit_traces(&result.error_traces, "auxiliary", "phys", window, &self.file(files::TRACE_AUXILIARY))?;
        emit_traces(
            &residual,
            "auxiliary_residual",
            "phys",
            window,
            &self.file(files::TRACE_AUXILIARY_RESIDUAL),
        )?;
        Ok((result.filters, result.error_traces, residual))
    }

    /// Control stage (μ3); returns the filters and the physical and virtual
    /// traces.
    pub fn control(
        &self,
        pre: &PrecomputedSignals,
        h_opt: &AuxiliaryFilterBank,
    ) -> Result<(ControlFilterMatrix, Traces, Traces)> {
        let cfg = StageConfig::new(self.config.step_sizes.control, self.config.num_samples);
        let result = run_control_stage(pre, h_opt, self.geometry(), &cfg)?;
        let virt = result.monitor_traces.unwrap_or_default();
        let window = self.config.smoothing_window;
        write_text(&self.file(files::CONTROL_FILTERS), &control_filters_to_string(&result.filters))?;
        emit_traces(
            &result.error_traces,
            "control_physical",
            "phys",
            window,
            &self.file(files::TRACE_CONTROL_PHYSICAL),
        )?;
        emit_traces(&virt, "control_virtual", "virt", window, &self.file(files::TRACE_CONTROL_VIRTUAL))?;
        Ok((result.filters, result.error_traces, virt))
    }

    /// Writes the filter report and `report.json`.
    pub fn finish(
        &self,
        traces: &StageTraces,
        w: &ControlFilterMatrix,
        wc: &ControlFilterMatrix,
    ) -> Result<SimulationReport> {
        emit_filter_report(
            w,
            wc,
            self.config.fs,
            self.config.freq_points,
            &self.file(files::FILTER_COEFFICIENTS),
            &self.file(files::FILTER_RESPONSE),
        )?;
        let report = build_report(&self.config, traces, w, wc)?;
        report.save(&self.file(files::REPORT))?;
        Ok(report)
    }

    pub fn load_control_filters(&self, name: &str) -> Result<ControlFilterMatrix> {
        let w = load_filters(&self.file(name))?.into_control()?;
        if !w.matches(self.geometry()) {
            return Err(Error::Config(format!("{name} does not match the configured geometry")));
        }
        Ok(w)
    }

    pub fn load_auxiliary_filters(&self) -> Result<AuxiliaryFilterBank> {
        let h = load_filters(&self.file(files::AUXILIARY_FILTERS))?.into_auxiliary()?;
        if !h.matches(self.geometry()) {
            return Err(Error::Config(format!(
                "{} does not match the configured geometry",
                files::AUXILIARY_FILTERS
            )));
        }
        Ok(h)
    }

    /// Reads every trace file back from the run directory.
    pub fn load_traces(&self) -> Result<StageTraces> {
        Ok(StageTraces {
            control_physical: read_traces(&self.file(files::TRACE_CONTROL_PHYSICAL))?,
            control_virtual: read_traces(&self.file(files::TRACE_CONTROL_VIRTUAL))?,
            ..self.load_traces_before_control()?
        })
    }

    /// Tuning and auxiliary traces only; the control traces are left empty.
    pub fn load_traces_before_control(&self) -> Result<StageTraces> {
        Ok(StageTraces {
            tuning: read_traces(&self.file(files::TRACE_TUNING))?,
            auxiliary: read_traces(&self.file(files::TRACE_AUXILIARY))?,
            auxiliary_residual: read_traces(&self.file(files::TRACE_AUXILIARY_RESIDUAL))?,
            ..StageTraces::default()
        })
    }

    /// Records a failure next to whatever was already written.
    pub fn mark_failed(out_dir: &Path, error: &Error) {
        let _ = std::fs::create_dir_all(out_dir);
        let _ = std::fs::write(out_dir.join(files::FAILED), format!("{error}\n"));
    }
}

fn clear_failed(out_dir: &Path) -> Result<()> {
    let marker = out_dir.join(files::FAILED);
    match std::fs::remove_file(&marker) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Error::io(marker, e)),
        _ => Ok(()),
    }
}

/// Runs the whole experiment and writes every artifact to the configured
/// output directory. On failure a `FAILED` marker holding the stage-tagged
/// message is left next to the partial outputs.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<SimulationReport> {
    run_pipeline_with(config, RunOptions::default(), |_| {})
}

/// [`run_pipeline`] with options and a callback invoked after each stage.
pub fn run_pipeline_with(
    config: &ExperimentConfig,
    options: RunOptions,
    mut on_stage: impl FnMut(&StageTiming),
) -> Result<SimulationReport> {
    let out_dir = config.out_dir();
    let result = (|| {
        let mut timings = Vec::new();
        let experiment = timed(Stage::Paths, &mut timings, || {
            let e = Experiment::prepare(config, options)?;
            clear_failed(&e.out_dir)?;
            Ok(e)
        })?;
        on_stage(timings.last().expect("stage was timed"));

        let (w, tuning, pre) = timed(Stage::Tuning, &mut timings, || {
            let pre = experiment.tuning_signals()?;
            let (w, traces) = experiment.tune(&pre)?;
            Ok((w, traces, pre))
        })?;
        on_stage(timings.last().expect("stage was timed"));

        let (h, auxiliary, auxiliary_residual) =
            timed(Stage::Auxiliary, &mut timings, || experiment.train_auxiliary(&pre, &w))?;
        drop(pre);
        on_stage(timings.last().expect("stage was timed"));

        let (wc, control_physical, control_virtual) = timed(Stage::Control, &mut timings, || {
            let pre = experiment.control_signals()?;
            experiment.control(&pre, &h)
        })?;
        on_stage(timings.last().expect("stage was timed"));

        let traces = StageTraces {
            tuning,
            auxiliary,
            auxiliary_residual,
            control_physical,
            control_virtual,
        };
        let mut report = timed(Stage::Report, &mut timings, || experiment.finish(&traces, &w, &wc))?;
        on_stage(timings.last().expect("stage was timed"));
        report.timings = timings;
        Ok(report)
    })();
    if let Err(e) = &result {
        Experiment::mark_failed(&out_dir, e);
    }
    result
}
