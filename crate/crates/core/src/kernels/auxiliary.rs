use super::engine::secondary_output;
use super::{AuxiliaryFilterBank, ControlFilterMatrix, StageConfig, StageResult};
use crate::error::{Error, Result};
use crate::paths::SystemGeometry;
use crate::signals::PrecomputedSignals;

/// Auxiliary-filter LMS.
///
/// With the optimal control filters frozen, the physical residual is
/// `e_p = d_p − FX_p·w_opt`. Each auxiliary filter `h_m` predicts it from
/// the stacked reference window `x̄(n)` (the `Nh` most recent samples of
/// every reference, zero before the first sample):
///
/// ```text
/// e_h,m(n) = e_p,m(n) − h_mᵀ(n)·x̄(n)
/// h_m(n+1) = h_m(n) + μ2·e_h,m(n)·x̄(n)
/// ```
///
/// Returns the trained bank, the `e_h` trace and (as `monitor_traces`) the
/// `e_p` trace.
pub fn train_auxiliary_filters(
    pre: &PrecomputedSignals,
    w_opt: &ControlFilterMatrix,
    geometry: &SystemGeometry,
    cfg: &StageConfig,
) -> Result<StageResult<AuxiliaryFilterBank>> {
    pre.check_geometry(geometry)?;
    cfg.check(pre.num_samples())?;
    if !w_opt.matches(geometry) {
        return Err(Error::invalid("control filters do not match the system geometry"));
    }
    let mics = geometry.num_phys;
    let nh = geometry.aux_len;

    // Zero-prefixed references so every window is a plain slice.
    let padded: Vec<Vec<f64>> = pre
        .references
        .iter()
        .map(|x| {
            let mut p = vec![0.0; nh - 1];
            p.extend_from_slice(x);
            p
        })
        .collect();

    let mut bank = AuxiliaryFilterBank::zeros(geometry);
    let mut traces: Vec<Vec<f64>> = (0..mics).map(|_| Vec::with_capacity(cfg.num_iterations)).collect();
    let mut scaled = vec![0.0; mics];

    // The control filters are frozen, so the physical residual is fixed.
    let residuals: Vec<Vec<f64>> = (0..mics)
        .map(|m| {
            (0..cfg.num_iterations)
                .map(|n| pre.dist_phys[m][n] - secondary_output(&pre.fxref_phys, m, n, w_opt))
                .collect()
        })
        .collect();

    for n in 0..cfg.num_iterations {
        for m in 0..mics {
            let residual = residuals[m][n];
            let mut prediction = 0.0;
            for (r, x) in padded.iter().enumerate() {
                let window = &x[n..n + nh];
                for (h, v) in bank.filter(m, r).iter().zip(window.iter().rev()) {
                    prediction += h * v;
                }
            }
            let e = residual - prediction;
            traces[m].push(e);
            scaled[m] = cfg.step_size * e;
        }

        let mut finite = true;
        for (m, &s) in scaled.iter().enumerate() {
            let stacked = bank.stacked_mut(m);
            for (r, x) in padded.iter().enumerate() {
                let window = &x[n..n + nh];
                let filter = &mut stacked[r * nh..(r + 1) * nh];
                for (h, v) in filter.iter_mut().zip(window.iter().rev()) {
                    *h += s * v;
                    finite &= h.is_finite();
                }
            }
        }
        if !finite {
            return Err(Error::Divergence {
                sample: n,
                step_name: "auxiliary step size (mu2)",
            });
        }
    }
    Ok(StageResult {
        filters: bank,
        error_traces: traces,
        monitor_traces: Some(residuals),
    })
}
