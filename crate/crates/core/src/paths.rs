//! The acoustic plant: system geometry, primary/secondary path impulse
//! responses for physical and virtual microphones, a seeded synthetic path
//! generator, validation, and the `MVANC-PATHS v1` text format.
//!
//! File layout:
//!
//! ```text
//! MVANC-PATHS v1 R K Mp Mv Lp Ls
//! primary_phys
//! <Mp·R rows, mic-major, Lp comma-separated taps each>
//! primary_virt
//! <Mv·R rows>
//! secondary_phys
//! <Mp·K rows>
//! secondary_virt
//! <Mv·K rows>
//! ```

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::GaussianRng;
use crate::textfmt::{fmt_row, parse_row, parse_usize};

pub const PATHS_MAGIC: &str = "MVANC-PATHS";
pub const PATHS_VERSION: &str = "v1";

/// Channel counts and filter lengths of an `R × K × Mp × Mv` system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemGeometry {
    /// Reference signals `R`.
    pub num_refs: usize,
    /// Secondary sources `K`.
    pub num_sources: usize,
    /// Physical error microphones `Mp`.
    pub num_phys: usize,
    /// Virtual error microphones `Mv`.
    pub num_virt: usize,
    /// Taps per control filter `L`.
    pub control_len: usize,
    /// Taps per auxiliary filter `Nh`.
    pub aux_len: usize,
}

impl Default for SystemGeometry {
    /// The 1×4×4 system with 512-tap filters.
    fn default() -> Self {
        Self {
            num_refs: 1,
            num_sources: 4,
            num_phys: 4,
            num_virt: 4,
            control_len: 512,
            aux_len: 512,
        }
    }
}

impl SystemGeometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("num_refs", self.num_refs),
            ("num_sources", self.num_sources),
            ("num_phys", self.num_phys),
            ("num_virt", self.num_virt),
            ("control_len", self.control_len),
            ("aux_len", self.aux_len),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::invalid(format!("geometry.{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// Responses indexed `[mic][source or reference][tap]`.
pub type ResponseMatrix = Vec<Vec<Vec<f64>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathGroup {
    PrimaryPhys,
    PrimaryVirt,
    SecondaryPhys,
    SecondaryVirt,
}

impl PathGroup {
    pub const ALL: [PathGroup; 4] = [
        PathGroup::PrimaryPhys,
        PathGroup::PrimaryVirt,
        PathGroup::SecondaryPhys,
        PathGroup::SecondaryVirt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PathGroup::PrimaryPhys => "primary_phys",
            PathGroup::PrimaryVirt => "primary_virt",
            PathGroup::SecondaryPhys => "secondary_phys",
            PathGroup::SecondaryVirt => "secondary_virt",
        }
    }

    pub fn is_primary(self) -> bool {
        matches!(self, PathGroup::PrimaryPhys | PathGroup::PrimaryVirt)
    }

    /// Expected `(mics, columns)` for this group under `geometry`.
    pub fn shape(self, geometry: &SystemGeometry) -> (usize, usize) {
        match self {
            PathGroup::PrimaryPhys => (geometry.num_phys, geometry.num_refs),
            PathGroup::PrimaryVirt => (geometry.num_virt, geometry.num_refs),
            PathGroup::SecondaryPhys => (geometry.num_phys, geometry.num_sources),
            PathGroup::SecondaryVirt => (geometry.num_virt, geometry.num_sources),
        }
    }
}

impl fmt::Display for PathGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Primary paths map each reference to each microphone; secondary paths map
/// each secondary source to each microphone. The same arrays serve as the
/// secondary-path estimates in the filtered-reference computation.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub primary_phys: ResponseMatrix,
    pub primary_virt: ResponseMatrix,
    pub secondary_phys: ResponseMatrix,
    pub secondary_virt: ResponseMatrix,
}

impl PathSet {
    pub fn group(&self, group: PathGroup) -> &ResponseMatrix {
        match group {
            PathGroup::PrimaryPhys => &self.primary_phys,
            PathGroup::PrimaryVirt => &self.primary_virt,
            PathGroup::SecondaryPhys => &self.secondary_phys,
            PathGroup::SecondaryVirt => &self.secondary_virt,
        }
    }

    pub fn group_mut(&mut self, group: PathGroup) -> &mut ResponseMatrix {
        match group {
            PathGroup::PrimaryPhys => &mut self.primary_phys,
            PathGroup::PrimaryVirt => &mut self.primary_virt,
            PathGroup::SecondaryPhys => &mut self.secondary_phys,
            PathGroup::SecondaryVirt => &mut self.secondary_virt,
        }
    }

    fn first_len(m: &ResponseMatrix) -> usize {
        m.first().and_then(|row| row.first()).map_or(0, Vec::len)
    }

    pub fn primary_len(&self) -> usize {
        Self::first_len(&self.primary_phys)
    }

    pub fn secondary_len(&self) -> usize {
        Self::first_len(&self.secondary_phys)
    }

    /// Infers the channel counts from the array shapes, pairing them with
    /// the given filter lengths.
    pub fn inferred_geometry(&self, control_len: usize, aux_len: usize) -> SystemGeometry {
        SystemGeometry {
            num_refs: self.primary_phys.first().map_or(0, Vec::len),
            num_sources: self.secondary_phys.first().map_or(0, Vec::len),
            num_phys: self.primary_phys.len(),
            num_virt: self.primary_virt.len(),
            control_len,
            aux_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    MicCount { expected: usize, found: usize },
    ColumnCount { expected: usize, found: usize },
    Length { expected: usize, found: usize },
    NonFinite { tap: usize },
}

/// One inconsistency found by [`validate_paths`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub group: PathGroup,
    pub mic: Option<usize>,
    pub column: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.group)?;
        if let Some(m) = self.mic {
            write!(f, " mic {m}")?;
        }
        if let Some(c) = self.column {
            let what = if self.group.is_primary() { "reference" } else { "source" };
            write!(f, " {what} {c}")?;
        }
        match &self.kind {
            ViolationKind::MicCount { expected, found } => {
                write!(f, ": expected {expected} microphones, found {found}")
            }
            ViolationKind::ColumnCount { expected, found } => {
                write!(f, ": expected {expected} columns, found {found}")
            }
            ViolationKind::Length { expected, found } => {
                write!(f, ": expected {expected} taps, found {found}")
            }
            ViolationKind::NonFinite { tap } => write!(f, ": tap {tap} is not finite"),
        }
    }
}

/// Checks `paths` against `geometry`. Returns every violation found; an
/// empty list means the set is dimensionally consistent and finite.
pub fn validate_paths(paths: &PathSet, geometry: &SystemGeometry) -> Vec<Violation> {
    let mut out = Vec::new();
    for group in PathGroup::ALL {
        let (mics, cols) = group.shape(geometry);
        let matrix = paths.group(group);
        if matrix.len() != mics {
            out.push(Violation {
                group,
                mic: None,
                column: None,
                kind: ViolationKind::MicCount {
                    expected: mics,
                    found: matrix.len(),
                },
            });
        }
        let group_len = PathSet::first_len(matrix).max(1);
        for (m, row) in matrix.iter().enumerate() {
            if row.len() != cols {
                out.push(Violation {
                    group,
                    mic: Some(m),
                    column: None,
                    kind: ViolationKind::ColumnCount {
                        expected: cols,
                        found: row.len(),
                    },
                });
            }
            for (c, response) in row.iter().enumerate() {
                if response.len() != group_len {
                    out.push(Violation {
                        group,
                        mic: Some(m),
                        column: Some(c),
                        kind: ViolationKind::Length {
                            expected: group_len,
                            found: response.len(),
                        },
                    });
                }
                if let Some(tap) = response.iter().position(|t| !t.is_finite()) {
                    out.push(Violation {
                        group,
                        mic: Some(m),
                        column: Some(c),
                        kind: ViolationKind::NonFinite { tap },
                    });
                }
            }
        }
    }
    out
}

/// Turns a non-empty violation list into an invalid-argument error.
pub fn ensure_valid(paths: &PathSet, geometry: &SystemGeometry) -> Result<()> {
    let violations = validate_paths(paths, geometry);
    if violations.is_empty() {
        return Ok(());
    }
    let listed: Vec<String> = violations.iter().take(5).map(ToString::to_string).collect();
    let more = violations.len().saturating_sub(5);
    let suffix = if more > 0 {
        format!(" (and {more} more)")
    } else {
        String::new()
    };
    Err(Error::invalid(format!(
        "path set does not match geometry: {}{suffix}",
        listed.join("; ")
    )))
}

const MAX_DELAY: u64 = 8;

fn decaying_response(rng: &mut GaussianRng, len: usize, delay: usize) -> Vec<f64> {
    let tau = len as f64 / 4.0;
    let mut taps = vec![0.0; len];
    for (n, tap) in taps.iter_mut().enumerate().skip(delay) {
        *tap = rng.standard_normal() * (-((n - delay) as f64) / tau).exp();
    }
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    let norm = energy.sqrt();
    for tap in &mut taps {
        *tap /= norm;
    }
    taps
}

/// Seeded synthetic plant.
///
/// Each response is a run of Gaussian taps under an `e^{−n/τ}` envelope
/// (`τ = length/4`) preceded by a pure delay of 1–8 samples, scaled to unit
/// energy. Delays are drawn once per (mic index, column) and shared by the
/// physical and virtual groups; taps are drawn independently per group.
pub fn synth_paths(
    geometry: &SystemGeometry,
    primary_len: usize,
    secondary_len: usize,
    seed: u64,
) -> Result<PathSet> {
    geometry.validate()?;
    if primary_len == 0 || secondary_len == 0 {
        return Err(Error::invalid("path lengths must be at least 1"));
    }
    let mut rng = GaussianRng::new(seed);
    let mics = geometry.num_phys.max(geometry.num_virt);
    let mut draw_delays = |cols: usize, len: usize| -> Vec<Vec<usize>> {
        (0..mics)
            .map(|_| {
                (0..cols)
                    .map(|_| (rng.range_inclusive(1, MAX_DELAY) as usize).min(len - 1))
                    .collect()
            })
            .collect()
    };
    let primary_delays = draw_delays(geometry.num_refs, primary_len);
    let secondary_delays = draw_delays(geometry.num_sources, secondary_len);

    let mut build = |group: PathGroup| -> ResponseMatrix {
        let (rows, cols) = group.shape(geometry);
        let (len, delays) = if group.is_primary() {
            (primary_len, &primary_delays)
        } else {
            (secondary_len, &secondary_delays)
        };
        (0..rows)
            .map(|m| {
                (0..cols)
                    .map(|c| decaying_response(&mut rng, len, delays[m][c]))
                    .collect()
            })
            .collect()
    };
    Ok(PathSet {
        primary_phys: build(PathGroup::PrimaryPhys),
        primary_virt: build(PathGroup::PrimaryVirt),
        secondary_phys: build(PathGroup::SecondaryPhys),
        secondary_virt: build(PathGroup::SecondaryVirt),
    })
}

/// Serializes `paths` in the `MVANC-PATHS v1` format.
pub fn write_paths<W: Write>(paths: &PathSet, mut out: W) -> Result<()> {
    let geometry = paths.inferred_geometry(1, 1);
    let (lp, ls) = (paths.primary_len(), paths.secondary_len());
    // Uniform shapes are required for the header to describe the file.
    let mut violations = validate_paths(paths, &geometry);
    violations.retain(|v| !matches!(v.kind, ViolationKind::NonFinite { .. }));
    if let Some(v) = violations.first() {
        return Err(Error::invalid(format!("cannot serialize ragged path set: {v}")));
    }
    if lp == 0 || ls == 0 {
        return Err(Error::invalid("cannot serialize a path set with empty responses"));
    }

    let mut text = format!(
        "{PATHS_MAGIC} {PATHS_VERSION} {} {} {} {} {lp} {ls}\n",
        geometry.num_refs, geometry.num_sources, geometry.num_phys, geometry.num_virt
    );
    for group in PathGroup::ALL {
        text.push_str(group.name());
        text.push('\n');
        for row in paths.group(group) {
            for response in row {
                text.push_str(&fmt_row(response));
                text.push('\n');
            }
        }
    }
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<path writer>", e))
}

pub fn save_paths(paths: &PathSet, destination: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_paths(paths, &mut buf)?;
    std::fs::write(destination, buf).map_err(|e| Error::io(destination, e))
}

/// Parses an `MVANC-PATHS v1` document.
pub fn parse_paths(text: &str) -> Result<PathSet> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::format("header", "file is empty"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(PATHS_MAGIC) {
        return Err(Error::format("header", format!("expected `{PATHS_MAGIC}` magic")));
    }
    match tokens.next() {
        Some(PATHS_VERSION) => {}
        other => {
            return Err(Error::format(
                "header",
                format!("unsupported version {:?}", other.unwrap_or("")),
            ))
        }
    }
    let r = parse_usize(tokens.next(), "header.R")?;
    let k = parse_usize(tokens.next(), "header.K")?;
    let mp = parse_usize(tokens.next(), "header.Mp")?;
    let mv = parse_usize(tokens.next(), "header.Mv")?;
    let lp = parse_usize(tokens.next(), "header.Lp")?;
    let ls = parse_usize(tokens.next(), "header.Ls")?;
    if tokens.next().is_some() {
        return Err(Error::format("header", "unexpected trailing fields"));
    }
    for (name, v) in [("R", r), ("K", k), ("Mp", mp), ("Mv", mv), ("Lp", lp), ("Ls", ls)] {
        if v == 0 {
            return Err(Error::format(format!("header.{name}"), "must be at least 1"));
        }
    }

    let geometry = SystemGeometry {
        num_refs: r,
        num_sources: k,
        num_phys: mp,
        num_virt: mv,
        control_len: 1,
        aux_len: 1,
    };
    let mut lines = lines.peekable();
    let mut read_group = |group: PathGroup| -> Result<ResponseMatrix> {
        let name = group.name();
        match lines.next() {
            Some(label) if label == name => {}
            Some(other) => {
                return Err(Error::format(
                    name,
                    format!("expected block label `{name}`, found `{}`", truncate(other)),
                ))
            }
            None => return Err(Error::format(name, "block is missing")),
        }
        let (mics, cols) = group.shape(&geometry);
        let len = if group.is_primary() { lp } else { ls };
        let expected_rows = mics * cols;
        let mut matrix = Vec::with_capacity(mics);
        for m in 0..mics {
            let mut row = Vec::with_capacity(cols);
            for c in 0..cols {
                let index = m * cols + c;
                let line = match lines.peek() {
                    Some(l) if !is_label(l) => lines.next().unwrap_or_default(),
                    _ => {
                        return Err(Error::format(
                            name,
                            format!("header implies {expected_rows} rows, found {index}"),
                        ))
                    }
                };
                row.push(parse_row(line, &format!("{name} row {index}"), len)?);
            }
            matrix.push(row);
        }
        Ok(matrix)
    };
    let paths = PathSet {
        primary_phys: read_group(PathGroup::PrimaryPhys)?,
        primary_virt: read_group(PathGroup::PrimaryVirt)?,
        secondary_phys: read_group(PathGroup::SecondaryPhys)?,
        secondary_virt: read_group(PathGroup::SecondaryVirt)?,
    };
    if let Some(extra) = lines.next() {
        return Err(Error::format(
            "trailer",
            format!("unexpected content after last block: `{}`", truncate(extra)),
        ));
    }
    Ok(paths)
}

fn is_label(line: &str) -> bool {
    PathGroup::ALL.iter().any(|g| g.name() == line)
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(40) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

pub fn load_paths(source: &Path) -> Result<PathSet> {
    let text = std::fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
    parse_paths(&text)
}
