//! C ABI over `mvanc-core`.
//!
//! Conventions:
//! - Every fallible function returns an [`MvancStatus`]; `MVANC_OK` is zero.
//! - On failure, [`mvanc_last_error`] returns a message for the calling
//!   thread, valid until the next failing call on that thread.
//! - Objects are opaque handles created by `*_new`/`*_load`/`*_synth`/`*_run`
//!   functions and released with the matching `*_free`. Passing NULL to a
//!   `*_free` function is a no-op.
//! - Array arguments are pointer + length pairs of `double`.
//! - Panics never cross the boundary; they surface as `MVANC_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use mvanc_core::harness::config::ExperimentConfig;
use mvanc_core::harness::{run_pipeline, SimulationReport};
use mvanc_core::paths::{load_paths, save_paths, synth_paths, PathGroup, PathSet, SystemGeometry};
use mvanc_core::{dsp, Error};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvancStatus {
    MvancOk = 0,
    MvancErrInvalidArgument = 1,
    MvancErrConfig = 2,
    MvancErrDivergence = 3,
    MvancErrIo = 4,
    MvancErrFormat = 5,
    MvancErrNullPointer = 6,
    MvancErrBufferTooSmall = 7,
    MvancErrPanic = 8,
}

/// Plant dimensions and adaptive filter lengths.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MvancGeometry {
    pub num_refs: usize,
    pub num_sources: usize,
    pub num_phys: usize,
    pub num_virt: usize,
    pub control_len: usize,
    pub aux_len: usize,
}

impl From<MvancGeometry> for SystemGeometry {
    fn from(g: MvancGeometry) -> Self {
        SystemGeometry {
            num_refs: g.num_refs,
            num_sources: g.num_sources,
            num_phys: g.num_phys,
            num_virt: g.num_virt,
            control_len: g.control_len,
            aux_len: g.aux_len,
        }
    }
}

impl From<SystemGeometry> for MvancGeometry {
    fn from(g: SystemGeometry) -> Self {
        MvancGeometry {
            num_refs: g.num_refs,
            num_sources: g.num_sources,
            num_phys: g.num_phys,
            num_virt: g.num_virt,
            control_len: g.control_len,
            aux_len: g.aux_len,
        }
    }
}

/// Path group selector for [`mvanc_paths_response`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvancPathGroup {
    MvancPrimaryPhys = 0,
    MvancPrimaryVirt = 1,
    MvancSecondaryPhys = 2,
    MvancSecondaryVirt = 3,
}

impl From<MvancPathGroup> for PathGroup {
    fn from(g: MvancPathGroup) -> Self {
        match g {
            MvancPathGroup::MvancPrimaryPhys => PathGroup::PrimaryPhys,
            MvancPathGroup::MvancPrimaryVirt => PathGroup::PrimaryVirt,
            MvancPathGroup::MvancSecondaryPhys => PathGroup::SecondaryPhys,
            MvancPathGroup::MvancSecondaryVirt => PathGroup::SecondaryVirt,
        }
    }
}

/// Opaque experiment configuration.
pub struct MvancConfig(ExperimentConfig);

/// Opaque path set.
pub struct MvancPaths(PathSet);

/// Opaque simulation report.
pub struct MvancReport(SimulationReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn status_of(error: &Error) -> MvancStatus {
    match error.root() {
        Error::InvalidArgument(_) => MvancStatus::MvancErrInvalidArgument,
        Error::Config(_) => MvancStatus::MvancErrConfig,
        Error::Divergence { .. } => MvancStatus::MvancErrDivergence,
        Error::Io { .. } => MvancStatus::MvancErrIo,
        Error::Format { .. } => MvancStatus::MvancErrFormat,
        Error::Stage { .. } => MvancStatus::MvancErrInvalidArgument,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Small { needed: usize, given: usize },
    Arg(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> FfiResult<()>) -> MvancStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MvancStatus::MvancOk,
        Ok(Err(failure)) => {
            let (status, message) = match failure {
                Failure::Core(e) => (status_of(&e), e.to_string()),
                Failure::Null(name) => (MvancStatus::MvancErrNullPointer, format!("`{name}` must not be NULL")),
                Failure::Small { needed, given } => (
                    MvancStatus::MvancErrBufferTooSmall,
                    format!("output buffer holds {given} values but {needed} are needed"),
                ),
                Failure::Arg(message) => (MvancStatus::MvancErrInvalidArgument, message),
            };
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            MvancStatus::MvancErrPanic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, name: &'static str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, name: &'static str) -> FfiResult<&'a mut [f64]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn reference<'a, T>(ptr: *const T, name: &'static str) -> FfiResult<&'a T> {
    ptr.as_ref().ok_or(Failure::Null(name))
}

unsafe fn string(ptr: *const c_char, name: &'static str) -> FfiResult<String> {
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::Arg(format!("`{name}` is not valid UTF-8")))
}

unsafe fn emit<T>(out: *mut *mut T, value: T, name: &'static str) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn copy_into(src: &[f64], dst: &mut [f64]) -> FfiResult<()> {
    if dst.len() < src.len() {
        return Err(Failure::Small {
            needed: src.len(),
            given: dst.len(),
        });
    }
    dst[..src.len()].copy_from_slice(src);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mvanc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread (empty if none).
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn mvanc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn mvanc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------- DSP

/// Causal FIR filtering; `output` must hold `input_len` values.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mvanc_fir_filter(
    coeffs: *const f64,
    num_coeffs: usize,
    input: *const f64,
    input_len: usize,
    output: *mut f64,
    output_len: usize,
) -> MvancStatus {
    guard(|| {
        let coeffs = slice(coeffs, num_coeffs, "coeffs")?;
        let input = slice(input, input_len, "input")?;
        let output = slice_mut(output, output_len, "output")?;
        copy_into(&dsp::fir_filter(coeffs, input)?, output)
    })
}

/// Hamming-windowed bandpass design; `taps` must hold `order + 1` values.
///
/// # Safety
/// `taps` must reference `taps_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mvanc_design_bandpass(
    order: usize,
    f_lo: f64,
    f_hi: f64,
    fs: f64,
    taps: *mut f64,
    taps_len: usize,
) -> MvancStatus {
    guard(|| {
        let taps = slice_mut(taps, taps_len, "taps")?;
        copy_into(dsp::design_bandpass(order, f_lo, f_hi, fs)?.taps(), taps)
    })
}

/// Frequency response on `n_points` frequencies `p·fs/(2·n_points)`.
/// Each of `frequencies`, `magnitude` and `phase` must hold `n_points`
/// values; `phase` may be NULL.
///
/// # Safety
/// Non-NULL pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mvanc_freq_response(
    coeffs: *const f64,
    num_coeffs: usize,
    n_points: usize,
    fs: f64,
    frequencies: *mut f64,
    magnitude: *mut f64,
    phase: *mut f64,
) -> MvancStatus {
    guard(|| {
        let coeffs = slice(coeffs, num_coeffs, "coeffs")?;
        let response = dsp::freq_response(coeffs, n_points, fs)?;
        copy_into(&response.frequencies, slice_mut(frequencies, n_points, "frequencies")?)?;
        copy_into(&response.magnitude, slice_mut(magnitude, n_points, "magnitude")?)?;
        if !phase.is_null() {
            copy_into(&response.phase, slice_mut(phase, n_points, "phase")?)?;
        }
        Ok(())
    })
}

/// Smoothed error level in dB; `output` must hold `len` values.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mvanc_smoothed_db(
    errors: *const f64,
    len: usize,
    window: usize,
    output: *mut f64,
    output_len: usize,
) -> MvancStatus {
    guard(|| {
        let errors = slice(errors, len, "errors")?;
        let output = slice_mut(output, output_len, "output")?;
        copy_into(&dsp::smoothed_db_trace(errors, window)?, output)
    })
}

// -------------------------------------------------------------- paths

/// Synthesizes a seeded plant.
///
/// # Safety
/// `geometry` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_paths_synth(
    geometry: *const MvancGeometry,
    primary_len: usize,
    secondary_len: usize,
    seed: u64,
    out: *mut *mut MvancPaths,
) -> MvancStatus {
    guard(|| {
        let geometry: SystemGeometry = (*reference(geometry, "geometry")?).into();
        let paths = synth_paths(&geometry, primary_len, secondary_len, seed)?;
        emit(out, MvancPaths(paths), "out")
    })
}

/// Loads a `MVANC-PATHS v1` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_paths_load(path: *const c_char, out: *mut *mut MvancPaths) -> MvancStatus {
    guard(|| {
        let path = PathBuf::from(string(path, "path")?);
        emit(out, MvancPaths(load_paths(&path)?), "out")
    })
}

/// Saves a path set as a `MVANC-PATHS v1` file.
///
/// # Safety
/// `paths` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mvanc_paths_save(paths: *const MvancPaths, path: *const c_char) -> MvancStatus {
    guard(|| {
        let paths = reference(paths, "paths")?;
        let path = PathBuf::from(string(path, "path")?);
        Ok(save_paths(&paths.0, &path)?)
    })
}

/// Primary and secondary response lengths.
///
/// # Safety
/// `paths` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_paths_lengths(
    paths: *const MvancPaths,
    primary_len: *mut usize,
    secondary_len: *mut usize,
) -> MvancStatus {
    guard(|| {
        let paths = reference(paths, "paths")?;
        if primary_len.is_null() || secondary_len.is_null() {
            return Err(Failure::Null("primary_len/secondary_len"));
        }
        *primary_len = paths.0.primary_len();
        *secondary_len = paths.0.secondary_len();
        Ok(())
    })
}

/// Copies one impulse response. `column` is the reference index for
/// primary groups and the source index for secondary groups.
///
/// # Safety
/// `paths` must be a live handle; `buf` must hold `buf_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mvanc_paths_response(
    paths: *const MvancPaths,
    group: MvancPathGroup,
    mic: usize,
    column: usize,
    buf: *mut f64,
    buf_len: usize,
) -> MvancStatus {
    guard(|| {
        let paths = reference(paths, "paths")?;
        let response = paths
            .0
            .group(group.into())
            .get(mic)
            .and_then(|row| row.get(column))
            .ok_or_else(|| Failure::Arg(format!("no response at mic {mic}, column {column}")))?;
        copy_into(response, slice_mut(buf, buf_len, "buf")?)
    })
}

/// Releases a path set. NULL is ignored.
///
/// # Safety
/// `paths` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn mvanc_paths_free(paths: *mut MvancPaths) {
    if !paths.is_null() {
        drop(Box::from_raw(paths));
    }
}

// ------------------------------------------------------------- config

/// The built-in default experiment.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_config_default(out: *mut *mut MvancConfig) -> MvancStatus {
    guard(|| emit(out, MvancConfig(ExperimentConfig::default()), "out"))
}

/// Loads and validates a config file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_config_load(path: *const c_char, out: *mut *mut MvancConfig) -> MvancStatus {
    guard(|| {
        let path = PathBuf::from(string(path, "path")?);
        emit(out, MvancConfig(ExperimentConfig::load(&path)?), "out")
    })
}

/// Parses and validates config text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_config_parse(text: *const c_char, out: *mut *mut MvancConfig) -> MvancStatus {
    guard(|| {
        let config = ExperimentConfig::parse(&string(text, "text")?)?;
        config.validate()?;
        emit(out, MvancConfig(config), "out")
    })
}

/// Sets the master seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mvanc_config_set_seed(config: *mut MvancConfig, seed: u64) -> MvancStatus {
    guard(|| {
        config.as_mut().ok_or(Failure::Null("config"))?.0.seed = seed;
        Ok(())
    })
}

/// Sets the number of samples per stage.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mvanc_config_set_num_samples(config: *mut MvancConfig, num_samples: usize) -> MvancStatus {
    guard(|| {
        config.as_mut().ok_or(Failure::Null("config"))?.0.num_samples = num_samples;
        Ok(())
    })
}

/// Sets the three step sizes (tuning, auxiliary, control).
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mvanc_config_set_step_sizes(
    config: *mut MvancConfig,
    tuning: f64,
    auxiliary: f64,
    control: f64,
) -> MvancStatus {
    guard(|| {
        let steps = &mut config.as_mut().ok_or(Failure::Null("config"))?.0.step_sizes;
        steps.tuning = tuning;
        steps.auxiliary = auxiliary;
        steps.control = control;
        Ok(())
    })
}

/// Replaces the geometry.
///
/// # Safety
/// `config` must be a live handle; `geometry` valid.
#[no_mangle]
pub unsafe extern "C" fn mvanc_config_set_geometry(
    config: *mut MvancConfig,
    geometry: *const MvancGeometry,
) -> MvancStatus {
    guard(|| {
        let geometry = *reference(geometry, "geometry")?;
        config.as_mut().ok_or(Failure::Null("config"))?.0.geometry = geometry.into();
        Ok(())
    })
}

/// Reads the geometry.
///
/// # Safety
/// `config` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_config_geometry(config: *const MvancConfig, out: *mut MvancGeometry) -> MvancStatus {
    guard(|| {
        let config = reference(config, "config")?;
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        *out = config.0.geometry.into();
        Ok(())
    })
}

/// Sets the output directory for [`mvanc_run_pipeline`].
///
/// # Safety
/// `config` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mvanc_config_set_output_dir(config: *mut MvancConfig, dir: *const c_char) -> MvancStatus {
    guard(|| {
        let dir = PathBuf::from(string(dir, "dir")?);
        config.as_mut().ok_or(Failure::Null("config"))?.0.output.dir = Some(dir);
        Ok(())
    })
}

/// Releases a config. NULL is ignored.
///
/// # Safety
/// `config` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn mvanc_config_free(config: *mut MvancConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

// ------------------------------------------------------------- report

/// Runs the full three-stage experiment, writing artifacts to the config's
/// output directory.
///
/// # Safety
/// `config` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_run_pipeline(config: *const MvancConfig, out: *mut *mut MvancReport) -> MvancStatus {
    guard(|| {
        let config = reference(config, "config")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let report = run_pipeline(&config.0)?;
        emit(out, MvancReport(report), "out")
    })
}

/// Number of virtual microphones in the report.
///
/// # Safety
/// `report` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mvanc_report_num_virtual(report: *const MvancReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.virtual_reduction_db.len())
}

/// Control-stage noise reduction at virtual microphone `index`, in dB.
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_report_virtual_reduction(
    report: *const MvancReport,
    index: usize,
    out: *mut f64,
) -> MvancStatus {
    guard(|| {
        let report = reference(report, "report")?;
        let value = *report
            .0
            .virtual_reduction_db
            .get(index)
            .ok_or_else(|| Failure::Arg(format!("virtual mic index {index} out of range")))?;
        *out.as_mut().ok_or(Failure::Null("out"))? = value;
        Ok(())
    })
}

/// Passband margins (in-band minus out-of-band mean magnitude, dB) of
/// control filter (1, 1) for the tuning and control stages.
///
/// # Safety
/// `report` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_report_passband_margins(
    report: *const MvancReport,
    tuning: *mut f64,
    control: *mut f64,
) -> MvancStatus {
    guard(|| {
        let report = reference(report, "report")?;
        *tuning.as_mut().ok_or(Failure::Null("tuning"))? = report.0.passband.tuning.margin_db;
        *control.as_mut().ok_or(Failure::Null("control"))? = report.0.passband.control.margin_db;
        Ok(())
    })
}

/// Wall-clock seconds spent in the whole run.
///
/// # Safety
/// `report` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mvanc_report_total_seconds(report: *const MvancReport) -> f64 {
    report
        .as_ref()
        .map_or(0.0, |r| r.0.timings.iter().map(|t| t.seconds).sum())
}

/// The report as JSON. Free the result with [`mvanc_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvanc_report_to_json(report: *const MvancReport, out: *mut *mut c_char) -> MvancStatus {
    guard(|| {
        let report = reference(report, "report")?;
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        *out = CString::new(report.0.to_json())
            .map_err(|_| Failure::Arg("report contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a report. NULL is ignored.
///
/// # Safety
/// `report` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn mvanc_report_free(report: *mut MvancReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
