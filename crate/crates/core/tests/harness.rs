mod support;

use mvanc_core::harness::config::ExperimentConfig;
use mvanc_core::harness::emit::read_traces;
use mvanc_core::harness::pipeline::{files, run_pipeline, run_pipeline_with, Experiment, RunOptions};
use mvanc_core::harness::report::{build_report, mic_levels, SimulationReport};
use mvanc_core::harness::state::load_filters;
use mvanc_core::{Error, Stage};
use support::*;

#[test]
fn small_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let report = run_pipeline(&config).unwrap();
    for name in [
        files::PATHS,
        files::TUNING_FILTERS,
        files::AUXILIARY_FILTERS,
        files::CONTROL_FILTERS,
        files::TRACE_TUNING,
        files::TRACE_AUXILIARY,
        files::TRACE_AUXILIARY_RESIDUAL,
        files::TRACE_CONTROL_PHYSICAL,
        files::TRACE_CONTROL_VIRTUAL,
        files::FILTER_COEFFICIENTS,
        files::FILTER_RESPONSE,
        files::REPORT,
    ] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    assert!(!dir.path().join(files::FAILED).exists());
    assert_eq!(report.virtual_reduction_db.len(), 2);
    assert!(report.virtual_reduction_db.iter().all(|r| r.is_finite()));
    assert_eq!(report.timings.len(), 5);
    assert_eq!(report.stages.len(), 5);

    // 1 + 2 + 2 columns per trace row; 6000 rows plus the header.
    let text = std::fs::read_to_string(dir.path().join(files::TRACE_CONTROL_VIRTUAL)).unwrap();
    assert_eq!(text.lines().count(), 6001);
    assert!(text.lines().all(|l| l.split(',').count() == 5));
    assert_eq!(
        text.lines().next().unwrap(),
        "sample,control_virtual_virt1_error,control_virtual_virt2_error,control_virtual_virt1_db,control_virtual_virt2_db"
    );

    let response = std::fs::read_to_string(dir.path().join(files::FILTER_RESPONSE)).unwrap();
    assert_eq!(response.lines().count(), 1 + 256);
    let coefficients = std::fs::read_to_string(dir.path().join(files::FILTER_COEFFICIENTS)).unwrap();
    assert_eq!(coefficients.lines().count(), 1 + 32);
}

#[test]
fn report_round_trips_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let report = run_pipeline(&config).unwrap();
    let text = std::fs::read_to_string(dir.path().join(files::REPORT)).unwrap();
    let back = SimulationReport::from_json(&text).unwrap();
    // Timings stay in memory only.
    assert!(back.timings.is_empty());
    let mut expected = SimulationReport { timings: Vec::new(), ..report };
    expected.config.output = Default::default();
    assert_eq!(expected, back);

    let mut echoed = back.config.clone();
    echoed.output = config.output.clone();
    assert_eq!(echoed, config);
    assert!(text.contains("toolkit-defined"));
    assert!(!text.contains(&dir.path().display().to_string()));
}

#[test]
fn reductions_recomputed_from_traces_match_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let report = run_pipeline(&config).unwrap();
    let virt = read_traces(&dir.path().join(files::TRACE_CONTROL_VIRTUAL)).unwrap();
    for (i, trace) in virt.iter().enumerate() {
        let levels = mic_levels(format!("virt{}", i + 1), trace, config.smoothing_window).unwrap();
        assert_eq!(levels.reduction_db.to_bits(), report.virtual_reduction_db[i].to_bits());
    }

    let experiment = Experiment::resume(&config, RunOptions::default()).unwrap();
    let w = load_filters(&dir.path().join(files::TUNING_FILTERS)).unwrap().into_control().unwrap();
    let wc = load_filters(&dir.path().join(files::CONTROL_FILTERS)).unwrap().into_control().unwrap();
    let rebuilt = build_report(&config, &experiment.load_traces().unwrap(), &w, &wc).unwrap();
    assert_eq!(rebuilt.to_json(), report.to_json());
}

#[test]
fn same_config_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&small_config(a.path())).unwrap();
    run_pipeline(&small_config(b.path())).unwrap();
    let diff = tree_differences(&tree_bytes(a.path()), &tree_bytes(b.path()));
    assert!(diff.is_empty(), "differing files: {diff:?}");
}

#[test]
fn different_seed_changes_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&small_config(a.path())).unwrap();
    let mut config = small_config(b.path());
    config.seed = 8;
    run_pipeline(&config).unwrap();
    let diff = tree_differences(&tree_bytes(a.path()), &tree_bytes(b.path()));
    assert!(diff.contains(&files::PATHS.to_string()));
    assert!(diff.contains(&files::TRACE_TUNING.to_string()));
}

#[test]
fn absurd_tuning_step_diverges_tagged_tuning() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.step_sizes.tuning = 1.0;
    let err = run_pipeline(&config).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Tuning));
    assert!(matches!(err.root(), Error::Divergence { .. }));
    assert_eq!(err.exit_code(), 2);
    let marker = std::fs::read_to_string(dir.path().join(files::FAILED)).unwrap();
    assert!(marker.starts_with("[tuning]"), "{marker}");
    assert!(marker.contains("mu1"), "{marker}");
    // The plant written before the failure is kept.
    assert!(dir.path().join(files::PATHS).is_file());
}

#[test]
fn success_clears_a_stale_failure_marker() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.step_sizes.control = 10.0;
    let err = run_pipeline(&config).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Control));
    assert!(dir.path().join(files::FAILED).exists());
    config.step_sizes.control = 2e-3;
    run_pipeline(&config).unwrap();
    assert!(!dir.path().join(files::FAILED).exists());
}

#[test]
fn missing_path_file_is_an_io_error_tagged_paths() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.paths = mvanc_core::harness::config::PathSource {
        file: Some(dir.path().join("nope.txt")),
        primary_len: None,
        secondary_len: None,
        seed: None,
    };
    let err = run_pipeline(&config).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Paths));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn loaded_paths_reproduce_synthesized_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = small_config(a.path());
    run_pipeline(&config).unwrap();
    let mut from_file = small_config(b.path());
    from_file.paths.file = Some(a.path().join(files::PATHS));
    from_file.paths.primary_len = None;
    from_file.paths.secondary_len = None;
    run_pipeline(&from_file).unwrap();
    let (ta, tb) = (tree_bytes(a.path()), tree_bytes(b.path()));
    // Only the config echo differs.
    assert_eq!(tree_differences(&ta, &tb), vec![files::REPORT.to_string()]);
}

#[test]
fn stage_callback_sees_every_stage_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    run_pipeline_with(&small_config(dir.path()), RunOptions::default(), |t| seen.push(t.stage)).unwrap();
    assert_eq!(
        seen,
        vec![Stage::Paths, Stage::Tuning, Stage::Auxiliary, Stage::Control, Stage::Report]
    );
}

#[test]
fn signal_dump_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.num_samples = 500;
    run_pipeline_with(&config, RunOptions { dump_signals: true }, |_| {}).unwrap();
    for prefix in ["signals_tuning", "signals_control"] {
        for suffix in ["references", "disturbance", "filtered_reference"] {
            assert!(dir.path().join(format!("{prefix}_{suffix}.csv")).is_file());
        }
    }
    let fx = std::fs::read_to_string(dir.path().join("signals_tuning_filtered_reference.csv")).unwrap();
    // sample + 2 mics × 2 sources × 1 ref, for both microphone groups.
    assert_eq!(fx.lines().next().unwrap().split(',').count(), 1 + 8);
    assert_eq!(fx.lines().count(), 501);
}

#[test]
fn invalid_config_rejected_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut config = small_config(&out);
    config.num_samples = 10;
    let err = run_pipeline(&config).unwrap_err();
    assert!(matches!(err.root(), Error::Config(_)));
    assert_eq!(err.exit_code(), 1);
    assert!(!out.join(files::PATHS).exists());
}

#[test]
fn config_file_resolves_relative_path_file() {
    let dir = tempfile::tempdir().unwrap();
    let paths = mvanc_core::paths::synth_paths(&small_config(dir.path()).geometry, 4, 4, 3).unwrap();
    mvanc_core::paths::save_paths(&paths, &dir.path().join("plant.txt")).unwrap();
    let mut config = small_config(dir.path());
    config.paths.file = Some("plant.txt".into());
    config.paths.primary_len = None;
    config.paths.secondary_len = None;
    let cfg_path = write_config(dir.path(), &config);
    let loaded = ExperimentConfig::load(&cfg_path).unwrap();
    assert_eq!(loaded.paths.file.unwrap(), dir.path().join("plant.txt"));
}
