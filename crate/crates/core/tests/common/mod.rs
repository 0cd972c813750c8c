//! Literal reference implementations of the three stage recursions.
//!
//! These work straight from the path set and the raw reference signals:
//! every filtered reference, disturbance and reference window is rebuilt
//! per sample by explicit convolution sums, with no shared code from the
//! library's precompute or kernels.

#![allow(dead_code)]

use mvanc_core::paths::{PathSet, SystemGeometry};
use mvanc_core::rng::GaussianRng;

/// `(path ∗ x)[n]`, zero for negative time.
fn conv_at(path: &[f64], x: &[f64], n: isize) -> f64 {
    let mut acc = 0.0;
    for (s, p) in path.iter().enumerate() {
        let t = n - s as isize;
        if t >= 0 {
            acc += p * x[t as usize];
        }
    }
    acc
}

/// Disturbance at mic `m`: Σ_j primary[m][j] ∗ x_j.
fn disturbance(primary: &[Vec<Vec<f64>>], refs: &[Vec<f64>], m: usize, n: usize) -> f64 {
    let mut d = 0.0;
    for (j, x) in refs.iter().enumerate() {
        d += conv_at(&primary[m][j], x, n as isize);
    }
    d
}

/// Filtered-reference vector x'_{jkm}(n) = [x'(n), x'(n−1), …, x'(n−L+1)].
fn filtered_vector(secondary: &[Vec<Vec<f64>>], x: &[f64], m: usize, k: usize, n: usize, l: usize) -> Vec<f64> {
    (0..l)
        .map(|lag| conv_at(&secondary[m][k], x, n as isize - lag as isize))
        .collect()
}

/// x̄_j(n) = [x_j(n), …, x_j(n−Nh+1)].
fn reference_vector(x: &[f64], n: usize, nh: usize) -> Vec<f64> {
    (0..nh)
        .map(|lag| {
            let t = n as isize - lag as isize;
            if t >= 0 {
                x[t as usize]
            } else {
                0.0
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// w[k][j] filters; FX[i][k][j] filtered vectors. Returns Σ_k Σ_j w_kjᵀ x'_jki.
fn anti_noise(w: &[Vec<Vec<f64>>], fx_i: &[Vec<Vec<f64>>]) -> f64 {
    let mut y = 0.0;
    for (k, row) in w.iter().enumerate() {
        for (j, wkj) in row.iter().enumerate() {
            y += dot(wkj, &fx_i[k][j]);
        }
    }
    y
}

pub struct OracleOutput {
    /// `[k][j][tap]`.
    pub w: Vec<Vec<Vec<f64>>>,
    /// `[m][j][tap]`.
    pub h: Vec<Vec<Vec<f64>>>,
    pub traces: Vec<Vec<f64>>,
    pub monitor: Vec<Vec<f64>>,
}

fn zeros3(a: usize, b: usize, c: usize) -> Vec<Vec<Vec<f64>>> {
    vec![vec![vec![0.0; c]; b]; a]
}

fn materialize(
    secondary: &[Vec<Vec<f64>>],
    refs: &[Vec<f64>],
    mics: usize,
    g: &SystemGeometry,
    n: usize,
) -> Vec<Vec<Vec<Vec<f64>>>> {
    (0..mics)
        .map(|i| {
            (0..g.num_sources)
                .map(|k| {
                    refs.iter()
                        .map(|x| filtered_vector(secondary, x, i, k, n, g.control_len))
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Tuning stage on the virtual microphones.
pub fn tuning_oracle(paths: &PathSet, refs: &[Vec<f64>], g: &SystemGeometry, mu: f64, iters: usize) -> OracleOutput {
    let mut w = zeros3(g.num_sources, g.num_refs, g.control_len);
    let mut traces = vec![Vec::new(); g.num_virt];
    for n in 0..iters {
        let fx = materialize(&paths.secondary_virt, refs, g.num_virt, g, n);
        let e: Vec<f64> = (0..g.num_virt)
            .map(|i| disturbance(&paths.primary_virt, refs, i, n) - anti_noise(&w, &fx[i]))
            .collect();
        for k in 0..g.num_sources {
            for j in 0..g.num_refs {
                for t in 0..g.control_len {
                    let mut grad = 0.0;
                    for i in 0..g.num_virt {
                        grad += fx[i][k][j][t] * e[i];
                    }
                    w[k][j][t] += mu * grad;
                }
            }
        }
        for (i, ei) in e.into_iter().enumerate() {
            traces[i].push(ei);
        }
    }
    OracleOutput {
        w,
        h: Vec::new(),
        traces,
        monitor: Vec::new(),
    }
}

/// Auxiliary stage with frozen `w_opt` (`[k][j][tap]`); `monitor` holds `e_p`.
pub fn auxiliary_oracle(
    paths: &PathSet,
    refs: &[Vec<f64>],
    g: &SystemGeometry,
    w_opt: &[Vec<Vec<f64>>],
    mu: f64,
    iters: usize,
) -> OracleOutput {
    let mut h = zeros3(g.num_phys, g.num_refs, g.aux_len);
    let mut traces = vec![Vec::new(); g.num_phys];
    let mut residual = vec![Vec::new(); g.num_phys];
    for n in 0..iters {
        let fx = materialize(&paths.secondary_phys, refs, g.num_phys, g, n);
        let xbar: Vec<Vec<f64>> = refs.iter().map(|x| reference_vector(x, n, g.aux_len)).collect();
        let eh: Vec<f64> = (0..g.num_phys)
            .map(|m| {
                let ep = disturbance(&paths.primary_phys, refs, m, n) - anti_noise(w_opt, &fx[m]);
                residual[m].push(ep);
                let mut yh = 0.0;
                for j in 0..g.num_refs {
                    yh += dot(&h[m][j], &xbar[j]);
                }
                ep - yh
            })
            .collect();
        for m in 0..g.num_phys {
            for j in 0..g.num_refs {
                for t in 0..g.aux_len {
                    h[m][j][t] += mu * eh[m] * xbar[j][t];
                }
            }
        }
        for (m, e) in eh.into_iter().enumerate() {
            traces[m].push(e);
        }
    }
    OracleOutput {
        w: Vec::new(),
        h,
        traces,
        monitor: residual,
    }
}

/// Control stage with frozen `h0` (`[m][j][tap]`).
pub fn control_oracle(
    paths: &PathSet,
    refs: &[Vec<f64>],
    g: &SystemGeometry,
    h0: &[Vec<Vec<f64>>],
    mu: f64,
    iters: usize,
) -> OracleOutput {
    let mut w = zeros3(g.num_sources, g.num_refs, g.control_len);
    let mut traces = vec![Vec::new(); g.num_phys];
    let mut monitor = vec![Vec::new(); g.num_virt];
    for n in 0..iters {
        let fxp = materialize(&paths.secondary_phys, refs, g.num_phys, g, n);
        let fxv = materialize(&paths.secondary_virt, refs, g.num_virt, g, n);
        let xbar: Vec<Vec<f64>> = refs.iter().map(|x| reference_vector(x, n, g.aux_len)).collect();
        let mut ep = vec![0.0; g.num_phys];
        let mut eh = vec![0.0; g.num_phys];
        for m in 0..g.num_phys {
            ep[m] = disturbance(&paths.primary_phys, refs, m, n) - anti_noise(&w, &fxp[m]);
            let mut target = 0.0;
            for j in 0..g.num_refs {
                target += dot(&h0[m][j], &xbar[j]);
            }
            eh[m] = ep[m] - target;
        }
        for i in 0..g.num_virt {
            monitor[i].push(disturbance(&paths.primary_virt, refs, i, n) - anti_noise(&w, &fxv[i]));
        }
        for k in 0..g.num_sources {
            for j in 0..g.num_refs {
                for t in 0..g.control_len {
                    let mut grad = 0.0;
                    for m in 0..g.num_phys {
                        grad += fxp[m][k][j][t] * eh[m];
                    }
                    w[k][j][t] += mu * grad;
                }
            }
        }
        for (m, e) in ep.into_iter().enumerate() {
            traces[m].push(e);
        }
    }
    OracleOutput {
        w,
        h: Vec::new(),
        traces,
        monitor,
    }
}

/// A random small problem: geometry with dims in {1, 2}, filter lengths in
/// {1, 4}, random Gaussian paths and references.
pub struct Instance {
    pub geometry: SystemGeometry,
    pub paths: PathSet,
    pub refs: Vec<Vec<f64>>,
    pub samples: usize,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = GaussianRng::new(seed);
    let mut pick = |choices: &[usize]| choices[rng.range_inclusive(0, choices.len() as u64 - 1) as usize];
    let geometry = SystemGeometry {
        num_refs: pick(&[1, 2]),
        num_sources: pick(&[1, 2]),
        num_phys: pick(&[1, 2]),
        num_virt: pick(&[1, 2]),
        control_len: pick(&[1, 4]),
        aux_len: pick(&[1, 4]),
    };
    let lp = pick(&[1, 3, 6]);
    let ls = pick(&[1, 2, 5]);
    let samples = pick(&[60, 200, 500]);
    let mut rng = GaussianRng::new(seed ^ 0xABCD);
    let mut matrix = |rows: usize, cols: usize, len: usize| -> Vec<Vec<Vec<f64>>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| (0..len).map(|_| 0.5 * rng.standard_normal()).collect()).collect())
            .collect()
    };
    let paths = PathSet {
        primary_phys: matrix(geometry.num_phys, geometry.num_refs, lp),
        primary_virt: matrix(geometry.num_virt, geometry.num_refs, lp),
        secondary_phys: matrix(geometry.num_phys, geometry.num_sources, ls),
        secondary_virt: matrix(geometry.num_virt, geometry.num_sources, ls),
    };
    let refs = (0..geometry.num_refs)
        .map(|_| (0..samples).map(|_| rng.standard_normal()).collect())
        .collect();
    Instance {
        geometry,
        paths,
        refs,
        samples,
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn traces_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len(), "channel count mismatch");
    a.iter().zip(b).map(|(x, y)| max_abs_diff(x, y)).fold(0.0, f64::max)
}

pub fn flatten3(v: &[Vec<Vec<f64>>]) -> Vec<f64> {
    v.iter().flatten().flatten().copied().collect()
}

pub fn nest3(flat: &[f64], a: usize, b: usize, c: usize) -> Vec<Vec<Vec<f64>>> {
    assert_eq!(flat.len(), a * b * c);
    (0..a)
        .map(|i| (0..b).map(|j| flat[(i * b + j) * c..(i * b + j + 1) * c].to_vec()).collect())
        .collect()
}
