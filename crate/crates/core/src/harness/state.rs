//! `MVANC-FILTERS v1` intermediate state files.
//!
//! ```text
//! MVANC-FILTERS v1 <kind> <rows> <cols> <len>
//! <kind>
//! <rows·cols lines of len comma-separated taps>
//! ```
//!
//! `kind` is `control` (rows = sources, cols = references) or `auxiliary`
//! (rows = physical mics, cols = references). Numbers use the same
//! 17-digit style as the path files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::{AuxiliaryFilterBank, ControlFilterMatrix};
use crate::textfmt::{fmt_row, parse_row, parse_usize};

pub const FILTERS_MAGIC: &str = "MVANC-FILTERS";
pub const FILTERS_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Control,
    Auxiliary,
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Control => "control",
            FilterKind::Auxiliary => "auxiliary",
        }
    }
}

/// A parsed filter file: `rows × cols` filters of `len` taps, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTable {
    pub kind: FilterKind,
    pub rows: usize,
    pub cols: usize,
    pub len: usize,
    pub taps: Vec<f64>,
}

impl FilterTable {
    pub fn into_control(self) -> Result<ControlFilterMatrix> {
        if self.kind != FilterKind::Control {
            return Err(Error::format("header.kind", "expected `control` filters"));
        }
        ControlFilterMatrix::from_taps(self.rows, self.cols, self.len, self.taps)
    }

    pub fn into_auxiliary(self) -> Result<AuxiliaryFilterBank> {
        if self.kind != FilterKind::Auxiliary {
            return Err(Error::format("header.kind", "expected `auxiliary` filters"));
        }
        AuxiliaryFilterBank::from_taps(self.rows, self.cols, self.len, self.taps)
    }
}

fn render(kind: FilterKind, rows: usize, cols: usize, len: usize, taps: &[f64]) -> String {
    let mut text = format!(
        "{FILTERS_MAGIC} {FILTERS_VERSION} {} {rows} {cols} {len}\n{}\n",
        kind.name(),
        kind.name()
    );
    for filter in taps.chunks(len) {
        text.push_str(&fmt_row(filter));
        text.push('\n');
    }
    text
}

pub fn control_filters_to_string(w: &ControlFilterMatrix) -> String {
    render(FilterKind::Control, w.num_sources(), w.num_refs(), w.filter_len(), w.taps())
}

pub fn auxiliary_filters_to_string(h: &AuxiliaryFilterBank) -> String {
    render(FilterKind::Auxiliary, h.num_mics(), h.num_refs(), h.filter_len(), h.taps())
}

pub fn parse_filters(text: &str) -> Result<FilterTable> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::format("header", "file is empty"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(FILTERS_MAGIC) {
        return Err(Error::format("header", format!("expected `{FILTERS_MAGIC}` magic")));
    }
    if tokens.next() != Some(FILTERS_VERSION) {
        return Err(Error::format("header", "unsupported version"));
    }
    let kind = match tokens.next() {
        Some("control") => FilterKind::Control,
        Some("auxiliary") => FilterKind::Auxiliary,
        other => {
            return Err(Error::format(
                "header.kind",
                format!("unknown filter kind {:?}", other.unwrap_or("")),
            ))
        }
    };
    let rows = parse_usize(tokens.next(), "header.rows")?;
    let cols = parse_usize(tokens.next(), "header.cols")?;
    let len = parse_usize(tokens.next(), "header.len")?;
    if tokens.next().is_some() {
        return Err(Error::format("header", "unexpected trailing fields"));
    }
    if rows == 0 || cols == 0 || len == 0 {
        return Err(Error::format("header", "dimensions must be at least 1"));
    }
    if lines.next() != Some(kind.name()) {
        return Err(Error::format(kind.name(), format!("expected block label `{}`", kind.name())));
    }
    let count = rows * cols;
    let mut taps = Vec::with_capacity(count * len);
    for index in 0..count {
        let line = lines.next().ok_or_else(|| {
            Error::format(kind.name(), format!("header implies {count} rows, found {index}"))
        })?;
        taps.extend(parse_row(line, &format!("{} row {index}", kind.name()), len)?);
    }
    if lines.next().is_some() {
        return Err(Error::format("trailer", "unexpected content after last row"));
    }
    Ok(FilterTable {
        kind,
        rows,
        cols,
        len,
        taps,
    })
}

pub fn load_filters(source: &Path) -> Result<FilterTable> {
    let text = std::fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
    parse_filters(&text)
}
