//! Seeded noise generation and the disturbance / filtered-reference
//! precomputation shared by all adaptive stages.

use serde::{Deserialize, Serialize};

use crate::dsp::{design_bandpass, fir_filter_unchecked};
use crate::error::{Error, Result};
use crate::paths::{ensure_valid, PathSet, SystemGeometry};
use crate::rng::{derive_seed, GaussianRng};

/// Band-limited primary noise: white Gaussian noise scaled by `amplitude`
/// and passed through a bandpass of order `filter_order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub band_lo: f64,
    pub band_hi: f64,
    pub amplitude: f64,
    pub length: usize,
    pub seed: u64,
    pub filter_order: usize,
}

impl NoiseSpec {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.band_lo > 0.0 && self.band_lo < self.band_hi && self.band_hi < fs / 2.0) {
            return Err(Error::invalid(format!(
                "noise band must satisfy 0 < band_lo < band_hi < fs/2 (got {}..{} Hz at fs={fs})",
                self.band_lo, self.band_hi
            )));
        }
        if self.length == 0 {
            return Err(Error::invalid("noise length must be at least 1"));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid(format!(
                "noise amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }
}

/// `n` standard-normal samples from the seeded generator in [`crate::rng`].
pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = GaussianRng::new(seed);
    (0..n).map(|_| rng.standard_normal()).collect()
}

/// `bandpass ∗ (amplitude · white_noise(length, seed))`.
pub fn make_primary_noise(spec: &NoiseSpec, fs: f64) -> Result<Vec<f64>> {
    spec.validate(fs)?;
    let bpf = design_bandpass(spec.filter_order, spec.band_lo, spec.band_hi, fs)?;
    let excitation: Vec<f64> = white_noise(spec.length, spec.seed)
        .into_iter()
        .map(|x| spec.amplitude * x)
        .collect();
    Ok(fir_filter_unchecked(bpf.taps(), &excitation))
}

/// `R` independent reference signals. Reference 0 uses `spec.seed`
/// directly; further references use derived seeds.
pub fn make_reference_signals(spec: &NoiseSpec, fs: f64, num_refs: usize) -> Result<Vec<Vec<f64>>> {
    (0..num_refs)
        .map(|r| {
            let seed = if r == 0 {
                spec.seed
            } else {
                derive_seed(spec.seed, r as u64)
            };
            make_primary_noise(&NoiseSpec { seed, ..spec.clone() }, fs)
        })
        .collect()
}

/// Reference signals filtered through secondary paths, one contiguous
/// channel per (mic, source, reference), each prefixed with `L − 1` zeros.
///
/// Channel `(m, k, r)` holds `fxref[t]` for `t ∈ [0, N + L − 1)`; the
/// filtered reference at sample `n` lag `l` is `fxref[n + L − 1 − l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredReference {
    num_mics: usize,
    num_sources: usize,
    num_refs: usize,
    prefix: usize,
    channel_len: usize,
    data: Vec<f64>,
}

impl FilteredReference {
    fn new(num_mics: usize, num_sources: usize, num_refs: usize, n: usize, control_len: usize) -> Self {
        let prefix = control_len - 1;
        let channel_len = n + prefix;
        Self {
            num_mics,
            num_sources,
            num_refs,
            prefix,
            channel_len,
            data: vec![0.0; num_mics * num_sources * num_refs * channel_len],
        }
    }

    fn offset(&self, mic: usize, source: usize, reference: usize) -> usize {
        ((mic * self.num_sources + source) * self.num_refs + reference) * self.channel_len
    }

    pub fn channel(&self, mic: usize, source: usize, reference: usize) -> &[f64] {
        let o = self.offset(mic, source, reference);
        &self.data[o..o + self.channel_len]
    }

    fn channel_mut(&mut self, mic: usize, source: usize, reference: usize) -> &mut [f64] {
        let o = self.offset(mic, source, reference);
        &mut self.data[o..o + self.channel_len]
    }

    /// The `L` most recent filtered-reference samples at sample `n`, oldest
    /// first (`window[L − 1 − l]` is lag `l`).
    #[inline]
    pub fn window(&self, mic: usize, source: usize, reference: usize, n: usize) -> &[f64] {
        let o = self.offset(mic, source, reference) + n;
        &self.data[o..o + self.prefix + 1]
    }

    pub fn num_mics(&self) -> usize {
        self.num_mics
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn num_refs(&self) -> usize {
        self.num_refs
    }

    /// Zero rows before the first sample (`L − 1`).
    pub fn prefix_len(&self) -> usize {
        self.prefix
    }

    /// `N + L − 1`.
    pub fn channel_len(&self) -> usize {
        self.channel_len
    }
}

/// Everything the adaptive stages consume for one primary-noise realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedSignals {
    /// Disturbance at each virtual microphone, `[mic][n]`.
    pub dist_virt: Vec<Vec<f64>>,
    /// Disturbance at each physical microphone, `[mic][n]`.
    pub dist_phys: Vec<Vec<f64>>,
    pub fxref_virt: FilteredReference,
    pub fxref_phys: FilteredReference,
    /// The `R` reference signals, `[r][n]`.
    pub references: Vec<Vec<f64>>,
}

impl PrecomputedSignals {
    pub fn num_samples(&self) -> usize {
        self.references.first().map_or(0, Vec::len)
    }

    /// Checks that the tensors carry the shapes `geometry` requires.
    pub fn check_geometry(&self, geometry: &SystemGeometry) -> Result<()> {
        let n = self.num_samples();
        let ok = self.references.len() == geometry.num_refs
            && self.references.iter().all(|r| r.len() == n)
            && self.dist_phys.len() == geometry.num_phys
            && self.dist_virt.len() == geometry.num_virt
            && self.dist_phys.iter().chain(&self.dist_virt).all(|d| d.len() == n)
            && [&self.fxref_phys, &self.fxref_virt].iter().all(|fx| {
                fx.num_sources == geometry.num_sources
                    && fx.num_refs == geometry.num_refs
                    && fx.prefix + 1 == geometry.control_len
                    && fx.channel_len == n + fx.prefix
            })
            && self.fxref_phys.num_mics == geometry.num_phys
            && self.fxref_virt.num_mics == geometry.num_virt;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("precomputed signals do not match the system geometry"))
        }
    }
}

/// Disturbances and filtered references for the given reference signals.
///
/// `D[m] = Σ_r primary[m][r] ∗ x_r`, and channel `(m, k, r)` of each
/// filtered-reference tensor is `L − 1` zeros followed by
/// `secondary[m][k] ∗ x_r`.
pub fn create_reference_signals(
    paths: &PathSet,
    references: &[Vec<f64>],
    geometry: &SystemGeometry,
) -> Result<PrecomputedSignals> {
    geometry.validate()?;
    ensure_valid(paths, geometry)?;
    if references.len() != geometry.num_refs {
        return Err(Error::invalid(format!(
            "expected {} reference signals, got {}",
            geometry.num_refs,
            references.len()
        )));
    }
    let n = references[0].len();
    if references.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("reference signals differ in length"));
    }
    if n < geometry.control_len {
        return Err(Error::invalid(format!(
            "need at least L = {} samples, got {n}",
            geometry.control_len
        )));
    }
    if let Some(bad) = references.iter().flatten().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("reference signal contains non-finite value {bad}")));
    }

    let disturbances = |primary: &Vec<Vec<Vec<f64>>>| -> Vec<Vec<f64>> {
        primary
            .iter()
            .map(|row| {
                let mut d = vec![0.0; n];
                for (path, x) in row.iter().zip(references) {
                    for (acc, y) in d.iter_mut().zip(fir_filter_unchecked(path, x)) {
                        *acc += y;
                    }
                }
                d
            })
            .collect()
    };
    let filtered = |secondary: &Vec<Vec<Vec<f64>>>| -> FilteredReference {
        let mut fx = FilteredReference::new(
            secondary.len(),
            geometry.num_sources,
            geometry.num_refs,
            n,
            geometry.control_len,
        );
        let prefix = fx.prefix;
        for (m, row) in secondary.iter().enumerate() {
            for (k, path) in row.iter().enumerate() {
                for (r, x) in references.iter().enumerate() {
                    let y = fir_filter_unchecked(path, x);
                    fx.channel_mut(m, k, r)[prefix..].copy_from_slice(&y);
                }
            }
        }
        fx
    };

    Ok(PrecomputedSignals {
        dist_virt: disturbances(&paths.primary_virt),
        dist_phys: disturbances(&paths.primary_phys),
        fxref_virt: filtered(&paths.secondary_virt),
        fxref_phys: filtered(&paths.secondary_phys),
        references: references.to_vec(),
    })
}
