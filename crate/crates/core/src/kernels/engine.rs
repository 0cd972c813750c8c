//! Per-sample multichannel FxLMS recursion shared by the tuning and
//! control stages.

use super::ControlFilterMatrix;
use crate::error::{Error, Result};
use crate::signals::FilteredReference;

/// `Σ_k Σ_r Σ_t w_kr[t] · x'_mkr(n − t)`, the anti-noise reaching mic `m`.
#[inline]
pub(crate) fn secondary_output(fx: &FilteredReference, m: usize, n: usize, w: &ControlFilterMatrix) -> f64 {
    let mut acc = 0.0;
    for k in 0..w.num_sources() {
        for r in 0..w.num_refs() {
            let window = fx.window(m, k, r, n);
            for (tap, x) in w.filter(k, r).iter().zip(window.iter().rev()) {
                acc += tap * x;
            }
        }
    }
    acc
}

pub(crate) struct FxlmsEngine<'a> {
    fx: &'a FilteredReference,
    dist: &'a [Vec<f64>],
    /// Subtracted from the microphone error before the update (the
    /// auxiliary-filter prediction in the control stage).
    target: Option<Vec<Vec<f64>>>,
    /// Monitoring microphones whose errors are recorded but never adapted on.
    monitor: Option<(&'a FilteredReference, &'a [Vec<f64>])>,
    weights: ControlFilterMatrix,
    step_size: f64,
    step_name: &'static str,
    scaled: Vec<f64>,
    gradient: Vec<f64>,
    pub traces: Vec<Vec<f64>>,
    pub monitor_traces: Option<Vec<Vec<f64>>>,
}

impl<'a> FxlmsEngine<'a> {
    pub fn new(
        fx: &'a FilteredReference,
        dist: &'a [Vec<f64>],
        weights: ControlFilterMatrix,
        step_size: f64,
        step_name: &'static str,
        capacity: usize,
    ) -> Self {
        let mics = dist.len();
        Self {
            fx,
            dist,
            target: None,
            monitor: None,
            gradient: vec![0.0; weights.filter_len()],
            weights,
            step_size,
            step_name,
            scaled: vec![0.0; mics],
            traces: (0..mics).map(|_| Vec::with_capacity(capacity)).collect(),
            monitor_traces: None,
        }
    }

    pub fn with_target(mut self, target: Vec<Vec<f64>>) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_monitor(mut self, fx: &'a FilteredReference, dist: &'a [Vec<f64>], capacity: usize) -> Self {
        self.monitor = Some((fx, dist));
        self.monitor_traces = Some((0..dist.len()).map(|_| Vec::with_capacity(capacity)).collect());
        self
    }

    pub fn weights(&self) -> &ControlFilterMatrix {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: ControlFilterMatrix) {
        self.weights = weights;
    }

    pub fn into_weights(self) -> ControlFilterMatrix {
        self.weights
    }

    /// Processes sample `n`: records the errors, then adapts.
    pub fn step(&mut self, n: usize) -> Result<()> {
        for m in 0..self.dist.len() {
            let e = self.dist[m][n] - secondary_output(self.fx, m, n, &self.weights);
            self.traces[m].push(e);
            let driven = match &self.target {
                Some(target) => e - target[m][n],
                None => e,
            };
            self.scaled[m] = self.step_size * driven;
        }
        if let (Some((fx_v, dist_v)), Some(traces)) = (self.monitor, self.monitor_traces.as_mut()) {
            for (m, trace) in traces.iter_mut().enumerate() {
                trace.push(dist_v[m][n] - secondary_output(fx_v, m, n, &self.weights));
            }
        }

        let len = self.weights.filter_len();
        let (sources, refs) = (self.weights.num_sources(), self.weights.num_refs());
        let mut finite = true;
        for k in 0..sources {
            for r in 0..refs {
                self.gradient.fill(0.0);
                for (m, &s) in self.scaled.iter().enumerate() {
                    let window = self.fx.window(m, k, r, n);
                    for (g, x) in self.gradient.iter_mut().zip(window.iter().rev()) {
                        *g += s * x;
                    }
                }
                let o = (k * refs + r) * len;
                let taps = &mut self.weights.taps_mut()[o..o + len];
                for (w, g) in taps.iter_mut().zip(&self.gradient) {
                    *w += g;
                    finite &= w.is_finite();
                }
            }
        }
        if !finite {
            return Err(Error::Divergence {
                sample: n,
                step_name: self.step_name,
            });
        }
        Ok(())
    }
}
