mod common;

use common::*;
use mvanc_core::kernels::{
    run_control_stage, train_auxiliary_filters, tune_control_filters, AuxiliaryFilterBank,
    ControlFilterMatrix, ControlStageRun, StageConfig,
};
use mvanc_core::paths::{synth_paths, SystemGeometry};
use mvanc_core::signals::{create_reference_signals, make_primary_noise, NoiseSpec, PrecomputedSignals};

const TOL: f64 = 1e-12;

#[test]
fn tuning_matches_literal_recursion() {
    for seed in 0..24 {
        let inst = random_instance(seed);
        let g = inst.geometry;
        let pre = create_reference_signals(&inst.paths, &inst.refs, &g).unwrap();
        let cfg = StageConfig::new(0.005, inst.samples);
        let got = tune_control_filters(&pre, &g, &cfg).unwrap();
        let want = tuning_oracle(&inst.paths, &inst.refs, &g, 0.005, inst.samples);
        assert!(max_abs_diff(got.filters.taps(), &flatten3(&want.w)) <= TOL, "seed {seed}");
        assert!(traces_diff(&got.error_traces, &want.traces) <= TOL, "seed {seed}");
    }
}

#[test]
fn auxiliary_matches_literal_recursion() {
    for seed in 100..124 {
        let inst = random_instance(seed);
        let g = inst.geometry;
        let pre = create_reference_signals(&inst.paths, &inst.refs, &g).unwrap();
        // A non-trivial frozen control filter.
        let w = tune_control_filters(&pre, &g, &StageConfig::new(0.005, inst.samples))
            .unwrap()
            .filters;
        let w_nested = nest3(w.taps(), g.num_sources, g.num_refs, g.control_len);
        let cfg = StageConfig::new(0.01, inst.samples);
        let got = train_auxiliary_filters(&pre, &w, &g, &cfg).unwrap();
        let want = auxiliary_oracle(&inst.paths, &inst.refs, &g, &w_nested, 0.01, inst.samples);
        assert!(max_abs_diff(got.filters.taps(), &flatten3(&want.h)) <= TOL, "seed {seed}");
        assert!(traces_diff(&got.error_traces, &want.traces) <= TOL, "seed {seed}");
        assert!(traces_diff(got.monitor_traces.as_ref().unwrap(), &want.monitor) <= TOL, "seed {seed}");
    }
}

#[test]
fn control_matches_literal_recursion() {
    for seed in 200..224 {
        let inst = random_instance(seed);
        let g = inst.geometry;
        let pre = create_reference_signals(&inst.paths, &inst.refs, &g).unwrap();
        let w = tune_control_filters(&pre, &g, &StageConfig::new(0.005, inst.samples))
            .unwrap()
            .filters;
        let h = train_auxiliary_filters(&pre, &w, &g, &StageConfig::new(0.01, inst.samples))
            .unwrap()
            .filters;
        let h_nested = nest3(h.taps(), g.num_phys, g.num_refs, g.aux_len);
        let got = run_control_stage(&pre, &h, &g, &StageConfig::new(0.005, inst.samples)).unwrap();
        let want = control_oracle(&inst.paths, &inst.refs, &g, &h_nested, 0.005, inst.samples);
        assert!(max_abs_diff(got.filters.taps(), &flatten3(&want.w)) <= TOL, "seed {seed}");
        assert!(traces_diff(&got.error_traces, &want.traces) <= TOL, "seed {seed}");
        assert!(traces_diff(got.monitor_traces.as_ref().unwrap(), &want.monitor) <= TOL, "seed {seed}");
    }
}

#[test]
fn scalar_tuning_hand_iteration() {
    // L = K = Mv = R = 1, filtered reference ≡ 1, disturbance ≡ 1.
    let g = SystemGeometry {
        num_refs: 1,
        num_sources: 1,
        num_phys: 1,
        num_virt: 1,
        control_len: 1,
        aux_len: 1,
    };
    let one = vec![vec![vec![1.0]]];
    let paths = mvanc_core::PathSet {
        primary_phys: one.clone(),
        primary_virt: one.clone(),
        secondary_phys: one.clone(),
        secondary_virt: one,
    };
    let pre = create_reference_signals(&paths, &[vec![1.0; 3]], &g).unwrap();
    let expected_w = [0.5, 0.75, 0.875];
    let expected_e = [1.0, 0.5, 0.25];
    for steps in 1..=3 {
        let r = tune_control_filters(&pre, &g, &StageConfig::new(0.5, steps)).unwrap();
        assert_eq!(r.filters.taps(), &[expected_w[steps - 1]]);
        assert_eq!(r.error_traces[0], expected_e[..steps]);
    }
}

#[test]
fn scalar_auxiliary_hand_iteration() {
    // Reference ≡ 1, physical residual ≡ 2 (disturbance 2, no control).
    let g = SystemGeometry {
        num_refs: 1,
        num_sources: 1,
        num_phys: 1,
        num_virt: 1,
        control_len: 1,
        aux_len: 1,
    };
    let paths = mvanc_core::PathSet {
        primary_phys: vec![vec![vec![2.0]]],
        primary_virt: vec![vec![vec![1.0]]],
        secondary_phys: vec![vec![vec![1.0]]],
        secondary_virt: vec![vec![vec![1.0]]],
    };
    let pre = create_reference_signals(&paths, &[vec![1.0; 2]], &g).unwrap();
    let w = ControlFilterMatrix::zeros(&g);
    let r1 = train_auxiliary_filters(&pre, &w, &g, &StageConfig::new(0.25, 1)).unwrap();
    assert_eq!(r1.filters.taps(), &[0.5]);
    assert_eq!(r1.error_traces[0], vec![2.0]);
    let r2 = train_auxiliary_filters(&pre, &w, &g, &StageConfig::new(0.25, 2)).unwrap();
    assert_eq!(r2.filters.taps(), &[0.875]);
    assert_eq!(r2.error_traces[0], vec![2.0, 1.5]);
}

fn band_noise(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    make_primary_noise(
        &NoiseSpec {
            band_lo: lo,
            band_hi: hi,
            amplitude: 2.0,
            length: n,
            seed,
            filter_order: 64,
        },
        16000.0,
    )
    .unwrap()
}

fn small_geometry() -> SystemGeometry {
    SystemGeometry {
        num_refs: 1,
        num_sources: 2,
        num_phys: 2,
        num_virt: 2,
        control_len: 32,
        aux_len: 32,
    }
}

fn small_pre(seed: u64, n: usize) -> (SystemGeometry, PrecomputedSignals) {
    let g = small_geometry();
    let paths = synth_paths(&g, 16, 8, 99).unwrap();
    let x = band_noise(seed, n, 800.0, 2500.0);
    (g, create_reference_signals(&paths, &[x], &g).unwrap())
}

#[test]
fn zero_step_freezes_every_stage() {
    let (g, pre) = small_pre(1, 400);
    let cfg = StageConfig::new(0.0, 400);
    let t = tune_control_filters(&pre, &g, &cfg).unwrap();
    assert!(t.filters.taps().iter().all(|w| *w == 0.0));
    assert_eq!(t.error_traces, pre.dist_virt);

    let a = train_auxiliary_filters(&pre, &t.filters, &g, &cfg).unwrap();
    assert!(a.filters.taps().iter().all(|h| *h == 0.0));
    assert_eq!(a.error_traces, pre.dist_phys);
    assert_eq!(a.monitor_traces.unwrap(), pre.dist_phys);

    let c = run_control_stage(&pre, &a.filters, &g, &cfg).unwrap();
    assert!(c.filters.taps().iter().all(|w| *w == 0.0));
    assert_eq!(c.error_traces, pre.dist_phys);
    assert_eq!(c.monitor_traces.unwrap(), pre.dist_virt);
}

#[test]
fn auxiliary_with_cancelled_residual_stays_zero() {
    // Identity plant with a control filter that cancels exactly: e_p ≡ 0.
    let g = SystemGeometry {
        num_refs: 1,
        num_sources: 1,
        num_phys: 1,
        num_virt: 1,
        control_len: 2,
        aux_len: 3,
    };
    let id = vec![vec![vec![1.0]]];
    let paths = mvanc_core::PathSet {
        primary_phys: id.clone(),
        primary_virt: id.clone(),
        secondary_phys: id.clone(),
        secondary_virt: id,
    };
    let x = band_noise(4, 300, 500.0, 3000.0);
    let pre = create_reference_signals(&paths, &[x], &g).unwrap();
    let w = ControlFilterMatrix::from_taps(1, 1, 2, vec![1.0, 0.0]).unwrap();
    let r = train_auxiliary_filters(&pre, &w, &g, &StageConfig::new(0.1, 300)).unwrap();
    assert!(r.filters.taps().iter().all(|h| *h == 0.0));
    assert!(r.error_traces[0].iter().all(|e| *e == 0.0));
}

#[test]
fn control_with_zero_auxiliary_equals_tuning_on_physical_mics() {
    let (g, pre) = small_pre(2, 3000);
    let cfg = StageConfig::new(0.002, 3000);
    let h0 = AuxiliaryFilterBank::zeros(&g);
    let control = run_control_stage(&pre, &h0, &g, &cfg).unwrap();

    // Tuning kernel fed the physical signals in place of the virtual ones.
    let mut swapped = pre.clone();
    swapped.dist_virt = pre.dist_phys.clone();
    swapped.fxref_virt = pre.fxref_phys.clone();
    let tuning = tune_control_filters(&swapped, &g, &cfg).unwrap();

    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(control.filters.taps()), bits(tuning.filters.taps()));
    for (a, b) in control.error_traces.iter().zip(&tuning.error_traces) {
        assert_eq!(bits(a), bits(b));
    }
}

fn tail_power(trace: &[f64], frac: f64) -> f64 {
    let start = trace.len() - (trace.len() as f64 * frac) as usize;
    let tail = &trace[start..];
    tail.iter().map(|e| e * e).sum::<f64>() / tail.len() as f64
}

#[test]
fn identical_paths_reach_tuning_performance() {
    let g = small_geometry();
    let mut paths = synth_paths(&g, 16, 8, 5).unwrap();
    paths.primary_phys = paths.primary_virt.clone();
    paths.secondary_phys = paths.secondary_virt.clone();
    let n = 40_000;
    let pre = create_reference_signals(&paths, &[band_noise(8, n, 800.0, 2500.0)], &g).unwrap();

    let tuning = tune_control_filters(&pre, &g, &StageConfig::new(2e-3, n)).unwrap();
    let aux = train_auxiliary_filters(&pre, &tuning.filters, &g, &StageConfig::new(1e-2, n)).unwrap();
    let control = run_control_stage(&pre, &aux.filters, &g, &StageConfig::new(2e-3, n)).unwrap();

    let virt = control.monitor_traces.unwrap();
    for (m, (tuned, controlled)) in tuning.error_traces.iter().zip(&virt).enumerate() {
        let tuned = 10.0 * tail_power(tuned, 0.1).log10();
        let controlled = 10.0 * tail_power(controlled, 0.1).log10();
        assert!(
            (controlled - tuned).abs() <= 3.0,
            "mic {m}: tuning {tuned:.2} dB vs control {controlled:.2} dB"
        );
    }
}

fn update_magnitude(run: &mut ControlStageRun<'_>) -> f64 {
    let mut total = 0.0;
    let mut count = 0;
    loop {
        let before = run.weights().taps().to_vec();
        if !run.step().unwrap() {
            break;
        }
        let delta: f64 = run
            .weights()
            .taps()
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        total += delta.sqrt();
        count += 1;
    }
    total / count as f64
}

#[test]
fn tuned_filters_are_a_fixed_point_of_the_control_stage() {
    // Wideband excitation so every auxiliary-filter mode converges, and Nh
    // spanning the full residual response (16 + 8 + 32 − 2 taps).
    let g = SystemGeometry {
        aux_len: 64,
        ..small_geometry()
    };
    let paths = synth_paths(&g, 16, 8, 21).unwrap();
    let n = 40_000;
    let tune_pre = create_reference_signals(&paths, &[band_noise(30, n, 100.0, 7900.0)], &g).unwrap();
    let tuning = tune_control_filters(&tune_pre, &g, &StageConfig::new(5e-4, n)).unwrap();
    let aux = train_auxiliary_filters(&tune_pre, &tuning.filters, &g, &StageConfig::new(2e-3, n)).unwrap();

    // Same band, fresh realization.
    let m = 10_000;
    let pre = create_reference_signals(&paths, &[band_noise(31, m, 100.0, 7900.0)], &g).unwrap();
    let cfg = StageConfig::new(5e-4, m);
    let mut cold = ControlStageRun::new(&pre, &aux.filters, &g, &cfg).unwrap();
    let mut warm = ControlStageRun::new(&pre, &aux.filters, &g, &cfg)
        .unwrap()
        .with_initial(tuning.filters.clone())
        .unwrap();
    let cold_mag = update_magnitude(&mut cold);
    let warm_mag = update_magnitude(&mut warm);
    assert!(
        warm_mag < 0.01 * cold_mag,
        "warm {warm_mag:e} vs cold {cold_mag:e}"
    );
}

#[test]
fn warm_start_rejects_wrong_shape() {
    let (g, pre) = small_pre(3, 100);
    let h = AuxiliaryFilterBank::zeros(&g);
    let run = ControlStageRun::new(&pre, &h, &g, &StageConfig::new(0.0, 100)).unwrap();
    let wrong = ControlFilterMatrix::from_taps(1, 1, 32, vec![0.0; 32]).unwrap();
    assert!(run.with_initial(wrong).is_err());
}

#[test]
fn huge_step_reports_divergence() {
    let (g, pre) = small_pre(5, 2000);
    let err = tune_control_filters(&pre, &g, &StageConfig::new(10.0, 2000)).unwrap_err();
    match err {
        mvanc_core::Error::Divergence { sample, step_name } => {
            assert!(sample < 2000);
            assert!(step_name.contains("mu1"));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn stage_runs_are_deterministic() {
    let (g, pre) = small_pre(6, 2000);
    let cfg = StageConfig::new(1e-3, 2000);
    let a = tune_control_filters(&pre, &g, &cfg).unwrap();
    let b = tune_control_filters(&pre, &g, &cfg).unwrap();
    assert_eq!(a, b);
}
