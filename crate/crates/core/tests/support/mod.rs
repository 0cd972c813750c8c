//! Small experiment configs and output-tree helpers for the harness tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mvanc_core::harness::config::ExperimentConfig;
use mvanc_core::paths::SystemGeometry;

/// A 1×2×2 system with short filters; a full run takes well under a second.
pub fn small_config(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.num_samples = 6000;
    c.smoothing_window = 256;
    c.freq_points = 256;
    c.geometry = SystemGeometry {
        num_refs: 1,
        num_sources: 2,
        num_phys: 2,
        num_virt: 2,
        control_len: 32,
        aux_len: 32,
    };
    c.paths.primary_len = Some(16);
    c.paths.secondary_len = Some(8);
    c.tuning_noise.filter_order = 64;
    c.control_noise.filter_order = 64;
    c.step_sizes.tuning = 2e-3;
    c.step_sizes.auxiliary = 1e-2;
    c.step_sizes.control = 2e-3;
    c.output.dir = Some(out.to_path_buf());
    c
}

/// Writes `config` as a config file in `dir` (the output directory is not
/// part of the file).
pub fn write_config(dir: &Path, config: &ExperimentConfig) -> PathBuf {
    let path = dir.join("experiment.cfg");
    std::fs::write(&path, config.to_toml()).unwrap();
    path
}

/// Every file in `dir` (non-recursive) by name.
pub fn tree_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            files.insert(
                entry.file_name().to_string_lossy().into_owned(),
                std::fs::read(entry.path()).unwrap(),
            );
        }
    }
    files
}

/// Names of the files that differ between two trees, including files
/// present in only one of them.
pub fn tree_differences(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    let mut names: Vec<&String> = a.keys().chain(b.keys()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .filter(|n| a.get(*n) != b.get(*n))
        .cloned()
        .collect()
}
