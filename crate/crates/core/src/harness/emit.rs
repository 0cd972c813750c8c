//! CSV emitters for error traces, filter coefficients, frequency responses
//! and (on request) the precomputed signals.
//!
//! All files use a header row, LF line endings and 17-significant-digit
//! decimals, so the raw columns parse back to the exact values written.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dsp::{freq_response, smoothed_db_trace};
use crate::error::{Error, Result};
use crate::kernels::ControlFilterMatrix;
use crate::signals::{FilteredReference, PrecomputedSignals};
use crate::textfmt::parse_f64;

fn create(destination: &Path) -> Result<BufWriter<File>> {
    File::create(destination)
        .map(BufWriter::new)
        .map_err(|e| Error::io(destination, e))
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn finish(mut out: BufWriter<File>, destination: &Path) -> Result<()> {
    out.flush().map_err(|e| Error::io(destination, e))
}

/// Writes `sample, <mic errors…>, <mic smoothed dB…>` for one stage.
///
/// Columns are named `<stage>_<mic_prefix><i>_error` and `…_db`, with
/// microphones numbered from 1.
pub fn emit_traces(
    traces: &[Vec<f64>],
    stage: &str,
    mic_prefix: &str,
    window: usize,
    destination: &Path,
) -> Result<()> {
    let len = traces.first().map_or(0, Vec::len);
    if traces.iter().any(|t| t.len() != len) {
        return Err(Error::invalid("trace lengths differ between microphones"));
    }
    let db = traces
        .iter()
        .map(|t| smoothed_db_trace(t, window))
        .collect::<Result<Vec<_>>>()?;

    let io = |e| Error::io(destination, e);
    let mut out = create(destination)?;
    write!(out, "sample").map_err(io)?;
    for suffix in ["error", "db"] {
        for i in 1..=traces.len() {
            write!(out, ",{stage}_{mic_prefix}{i}_{suffix}").map_err(io)?;
        }
    }
    writeln!(out).map_err(io)?;
    for n in 0..len {
        write!(out, "{n}").map_err(io)?;
        for column in traces.iter().chain(&db) {
            write!(out, ",{:.16e}", column[n]).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    finish(out, destination)
}

/// Raw error columns read back from a trace CSV, `[mic][sample]`.
pub fn read_traces(source: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
    parse_traces(&text)
}

pub fn parse_traces(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format("header", "trace file is empty"))?;
    let columns = header.split(',').count();
    if columns < 3 || (columns - 1) % 2 != 0 || !header.starts_with("sample,") {
        return Err(Error::format("header", "expected `sample`, then error and dB columns per microphone"));
    }
    let mics = (columns - 1) / 2;
    let mut traces = vec![Vec::new(); mics];
    for (n, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let index = fields.next().unwrap_or_default();
        if index.parse::<usize>().ok() != Some(n) {
            return Err(Error::format("sample", format!("row {n} has index `{index}`")));
        }
        for trace in traces.iter_mut() {
            let token = fields
                .next()
                .ok_or_else(|| Error::format(format!("row {n}"), "missing error column"))?;
            trace.push(parse_f64(token, "error")?);
        }
        if fields.count() != mics {
            return Err(Error::format(format!("row {n}"), "wrong number of columns"));
        }
    }
    Ok(traces)
}

fn filter_label(k: usize, r: usize) -> String {
    format!("s{}_r{}", k + 1, r + 1)
}

/// Writes the coefficient and magnitude-response CSVs comparing tuning-stage
/// filters `w` with control-stage filters `wc`.
///
/// `coefficients`: `tap, tuning_s1_r1, control_s1_r1, …`.
/// `response`: `frequency_hz, tuning_s1_r1, control_s1_r1, …` with linear
/// magnitudes on `n_points` frequencies from 0 up to (not including) fs/2.
pub fn emit_filter_report(
    w: &ControlFilterMatrix,
    wc: &ControlFilterMatrix,
    fs: f64,
    n_points: usize,
    coefficients: &Path,
    response: &Path,
) -> Result<()> {
    if w.num_sources() != wc.num_sources() || w.num_refs() != wc.num_refs() || w.filter_len() != wc.filter_len() {
        return Err(Error::invalid("tuning and control filter matrices differ in shape"));
    }
    let pairs: Vec<(usize, usize)> = (0..w.num_sources())
        .flat_map(|k| (0..w.num_refs()).map(move |r| (k, r)))
        .collect();
    let mut header = String::new();
    for &(k, r) in &pairs {
        let label = filter_label(k, r);
        header.push_str(&format!(",tuning_{label},control_{label}"));
    }

    let mut out = create(coefficients)?;
    writeln!(out, "tap{header}").map_err(io_error(coefficients))?;
    for t in 0..w.filter_len() {
        write!(out, "{t}").map_err(io_error(coefficients))?;
        for &(k, r) in &pairs {
            write!(out, ",{:.16e},{:.16e}", w.filter(k, r)[t], wc.filter(k, r)[t]).map_err(io_error(coefficients))?;
        }
        writeln!(out).map_err(io_error(coefficients))?;
    }
    finish(out, coefficients)?;

    let mut responses = Vec::with_capacity(2 * pairs.len());
    for &(k, r) in &pairs {
        responses.push(freq_response(w.filter(k, r), n_points, fs)?);
        responses.push(freq_response(wc.filter(k, r), n_points, fs)?);
    }
    let mut out = create(response)?;
    writeln!(out, "frequency_hz{header}").map_err(io_error(response))?;
    for p in 0..n_points {
        write!(out, "{:.16e}", responses[0].frequencies[p]).map_err(io_error(response))?;
        for resp in &responses {
            write!(out, ",{:.16e}", resp.magnitude[p]).map_err(io_error(response))?;
        }
        writeln!(out).map_err(io_error(response))?;
    }
    finish(out, response)
}

fn emit_columns(columns: &[(String, &[f64])], destination: &Path) -> Result<()> {
    let io = |e| Error::io(destination, e);
    let mut out = create(destination)?;
    write!(out, "sample").map_err(io)?;
    for (name, _) in columns {
        write!(out, ",{name}").map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    let len = columns.first().map_or(0, |(_, c)| c.len());
    for n in 0..len {
        write!(out, "{n}").map_err(io)?;
        for (_, column) in columns {
            write!(out, ",{:.16e}", column[n]).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    finish(out, destination)
}

fn filtered_columns<'a>(fx: &'a FilteredReference, mic: &str) -> Vec<(String, &'a [f64])> {
    let mut columns = Vec::new();
    for m in 0..fx.num_mics() {
        for k in 0..fx.num_sources() {
            for r in 0..fx.num_refs() {
                let channel = &fx.channel(m, k, r)[fx.prefix_len()..];
                columns.push((format!("{mic}{}_s{}_r{}", m + 1, k + 1, r + 1), channel));
            }
        }
    }
    columns
}

/// Debug dump of one stage's precomputed signals as
/// `<prefix>_references.csv`, `<prefix>_disturbance.csv` and
/// `<prefix>_filtered_reference.csv` in `dir`, one column per channel.
pub fn dump_signals(pre: &PrecomputedSignals, dir: &Path, prefix: &str) -> Result<()> {
    let refs: Vec<(String, &[f64])> = pre
        .references
        .iter()
        .enumerate()
        .map(|(r, x)| (format!("ref{}", r + 1), x.as_slice()))
        .collect();
    emit_columns(&refs, &dir.join(format!("{prefix}_references.csv")))?;

    let mut dist: Vec<(String, &[f64])> = Vec::new();
    for (name, group) in [("phys", &pre.dist_phys), ("virt", &pre.dist_virt)] {
        for (m, d) in group.iter().enumerate() {
            dist.push((format!("{name}{}", m + 1), d.as_slice()));
        }
    }
    emit_columns(&dist, &dir.join(format!("{prefix}_disturbance.csv")))?;

    let mut fx = filtered_columns(&pre.fxref_phys, "phys");
    fx.extend(filtered_columns(&pre.fxref_virt, "virt"));
    emit_columns(&fx, &dir.join(format!("{prefix}_filtered_reference.csv")))
}
