//! FIR kernels: causal filtering, Hamming-windowed bandpass design,
//! frequency-response evaluation and the smoothed-dB error metric.
//!
//! All arithmetic is `f64`. Signals are plain `&[f64]` slices; the sample
//! rate travels alongside them as an explicit argument where it matters.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Squared errors below this are clamped before taking `log10`.
pub const POWER_FLOOR: f64 = 1e-300;

/// Non-empty, finite FIR tap vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FirCoefficients(Vec<f64>);

impl FirCoefficients {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("FIR coefficients must not be empty"));
        }
        if let Some(i) = taps.iter().position(|t| !t.is_finite()) {
            return Err(Error::invalid(format!("FIR tap {i} is not finite")));
        }
        Ok(Self(taps))
    }

    pub fn taps(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for FirCoefficients {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub frequencies: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub phase: Vec<f64>,
}

/// Causal direct-form FIR filter with zero initial state.
///
/// `output[n] = Σ_t coeffs[t] · input[n − t]`, accumulated in ascending tap
/// order. The output has the same length as the input.
pub fn fir_filter(coeffs: &[f64], input: &[f64]) -> Result<Vec<f64>> {
    if coeffs.is_empty() {
        return Err(Error::invalid("FIR coefficients must not be empty"));
    }
    Ok(fir_filter_unchecked(coeffs, input))
}

pub(crate) fn fir_filter_unchecked(coeffs: &[f64], input: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; input.len()];
    for (n, y) in out.iter_mut().enumerate() {
        let taps = coeffs.len().min(n + 1);
        let mut acc = 0.0;
        for (t, c) in coeffs[..taps].iter().enumerate() {
            acc += c * input[n - t];
        }
        *y = acc;
    }
    out
}

fn check_band(f_lo: f64, f_hi: f64, fs: f64) -> Result<()> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid(format!("sample rate must be positive, got {fs}")));
    }
    if !(f_lo > 0.0 && f_lo < f_hi && f_hi < fs / 2.0) {
        return Err(Error::invalid(format!(
            "band edges must satisfy 0 < f_lo < f_hi < fs/2 (got {f_lo}, {f_hi}, fs={fs})"
        )));
    }
    Ok(())
}

/// Linear-phase bandpass of `order + 1` taps: ideal bandpass impulse
/// response truncated by a Hamming window, then scaled to unit gain at the
/// passband centre `(f_lo + f_hi) / 2`, as `fir1` does.
pub fn design_bandpass(order: usize, f_lo: f64, f_hi: f64, fs: f64) -> Result<FirCoefficients> {
    if order < 2 || !order.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "bandpass order must be even and at least 2, got {order}"
        )));
    }
    check_band(f_lo, f_hi, fs)?;

    // Normalized edges in units of Nyquist.
    let w1 = 2.0 * f_lo / fs;
    let w2 = 2.0 * f_hi / fs;
    let mid = order / 2;
    let mut taps = vec![0.0; order + 1];
    for i in 0..=mid {
        let m = (mid - i) as f64;
        let ideal = if i == mid {
            w2 - w1
        } else {
            ((PI * w2 * m).sin() - (PI * w1 * m).sin()) / (PI * m)
        };
        let window = 0.54 - 0.46 * (2.0 * PI * i as f64 / order as f64).cos();
        let v = ideal * window;
        taps[i] = v;
        taps[order - i] = v;
    }

    // Unit magnitude at the band centre.
    let centre = 0.5 * (w1 + w2) * PI;
    let gain = dtft(&taps, centre).norm();
    for t in &mut taps {
        *t /= gain;
    }
    FirCoefficients::new(taps)
}

/// DTFT at normalized angular frequency `omega` (radians/sample).
fn dtft(taps: &[f64], omega: f64) -> Complex64 {
    taps.iter()
        .enumerate()
        .map(|(t, &c)| Complex64::from_polar(c, -omega * t as f64))
        .sum()
}

/// Evaluates `H(f) = Σ_t taps[t] e^{-i2πft/fs}` on `n_points` equispaced
/// frequencies `f_p = p·fs/(2·n_points)` covering `[0, fs/2)`, matching
/// `freqz(b, 1, n, fs)`.
///
/// Uses a `2·n_points` FFT; taps beyond that length are folded modulo the
/// FFT size, which is exact on this grid.
pub fn freq_response(coeffs: &[f64], n_points: usize, fs: f64) -> Result<FrequencyResponse> {
    if coeffs.is_empty() {
        return Err(Error::invalid("FIR coefficients must not be empty"));
    }
    if n_points < 2 {
        return Err(Error::invalid(format!("n_points must be at least 2, got {n_points}")));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid(format!("sample rate must be positive, got {fs}")));
    }
    let nfft = 2 * n_points;
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (t, &c) in coeffs.iter().enumerate() {
        buf[t % nfft].re += c;
    }
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let frequencies = (0..n_points)
        .map(|p| p as f64 * fs / nfft as f64)
        .collect();
    let magnitude = buf[..n_points].iter().map(|h| h.norm()).collect();
    let phase = buf[..n_points].iter().map(|h| h.arg()).collect();
    Ok(FrequencyResponse {
        frequencies,
        magnitude,
        phase,
    })
}

/// Even windows are reduced to the next lower odd width.
pub fn odd_window(window: usize) -> usize {
    if window.is_multiple_of(2) {
        window.saturating_sub(1).max(1)
    } else {
        window
    }
}

/// `10·log10` of the centred moving average of `errors²`.
///
/// Near the ends the window is clipped to the available samples and the
/// mean is taken over what remains. Squared values are clamped at
/// [`POWER_FLOOR`] before the logarithm.
pub fn smoothed_db_trace(errors: &[f64], window: usize) -> Result<Vec<f64>> {
    if window < 1 {
        return Err(Error::invalid("smoothing window must be at least 1"));
    }
    let half = (odd_window(window) - 1) / 2;
    let len = errors.len();
    let power: Vec<f64> = errors.iter().map(|e| e * e).collect();

    // Window sums from 64-sample block sums, no running prefix.
    const BLOCK: usize = 64;
    let blocks: Vec<f64> = power.chunks(BLOCK).map(|c| c.iter().sum()).collect();
    let range_sum = |lo: usize, hi: usize| -> f64 {
        let first_full = lo.div_ceil(BLOCK);
        let last_full = (hi + 1) / BLOCK;
        if first_full >= last_full {
            return power[lo..=hi].iter().sum();
        }
        power[lo..first_full * BLOCK].iter().sum::<f64>()
            + blocks[first_full..last_full].iter().sum::<f64>()
            + power[last_full * BLOCK..=hi].iter().sum::<f64>()
    };

    Ok((0..len)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(len - 1);
            let mean = range_sum(lo, hi) / (hi + 1 - lo) as f64;
            10.0 * mean.max(POWER_FLOOR).log10()
        })
        .collect())
}
