//! Experiment configuration.
//!
//! The file format is TOML. Every key is required except the optional seed
//! overrides, `paths.file` and `output.dir`; unknown keys are rejected so
//! that a misspelled parameter can never fall back to a default silently.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::SystemGeometry;
use crate::rng::derive_seed;
use crate::signals::NoiseSpec;

pub const DEFAULT_OUT_DIR: &str = "mvanc-out";

/// Band-limited noise parameters as written in the config file; the length
/// and seed are filled in from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub band_lo: f64,
    pub band_hi: f64,
    pub amplitude: f64,
    pub filter_order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSizes {
    /// Tuning-stage MCFxLMS (μ1).
    pub tuning: f64,
    /// Auxiliary-filter LMS (μ2).
    pub auxiliary: f64,
    /// Control-stage FxLMS (μ3).
    pub control: f64,
}

/// Where the plant comes from: a `MVANC-PATHS v1` file, or the seeded
/// synthesizer with the given response lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; path and noise seeds derive from it unless overridden.
    pub seed: u64,
    /// Sample rate in Hz.
    pub fs: f64,
    /// Samples per stage (`N`).
    pub num_samples: usize,
    /// Moving-average width for the smoothed-dB traces.
    pub smoothing_window: usize,
    /// Frequency grid size for the filter report.
    pub freq_points: usize,
    pub geometry: SystemGeometry,
    pub paths: PathSource,
    pub tuning_noise: NoiseConfig,
    pub control_noise: NoiseConfig,
    pub step_sizes: StepSizes,
    /// Not echoed into the report, so that identical experiments written to
    /// different directories produce identical files.
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    /// The 1×4×4 system at 16 kHz with 512-tap filters, 800–2500 Hz tuning
    /// noise, 800–1800 Hz control noise and step sizes 1e-6 / 1e-3 / 1e-5.
    /// Runs 200 000 samples; the full-scale experiment uses 800 001.
    fn default() -> Self {
        let noise = |band_hi| NoiseConfig {
            band_lo: 800.0,
            band_hi,
            amplitude: 2.0,
            filter_order: 512,
            seed: None,
        };
        Self {
            seed: 7,
            fs: 16000.0,
            num_samples: 200_000,
            smoothing_window: 2048,
            freq_points: 1024,
            geometry: SystemGeometry::default(),
            paths: PathSource {
                file: None,
                primary_len: Some(128),
                secondary_len: Some(32),
                seed: None,
            },
            tuning_noise: noise(2500.0),
            control_noise: noise(1800.0),
            step_sizes: StepSizes {
                tuning: 1e-6,
                auxiliary: 1e-3,
                control: 1e-5,
            },
            output: OutputConfig::default(),
        }
    }
}

/// Full-scale sample count: 50 s at 16 kHz including `t = 0`.
pub const FULL_SCALE_SAMPLES: usize = 800_001;

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads and validates a config file. A relative `paths.file` is
    /// resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let (Some(file), Some(base)) = (config.paths.file.as_mut(), path.parent()) {
            if file.is_relative() {
                *file = base.join(&*file);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return bad(format!("fs must be positive, got {}", self.fs));
        }
        self.geometry
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.num_samples < self.geometry.control_len {
            return bad(format!(
                "num_samples ({}) must be at least geometry.control_len ({})",
                self.num_samples, self.geometry.control_len
            ));
        }
        if self.smoothing_window == 0 {
            return bad("smoothing_window must be at least 1".into());
        }
        if self.freq_points < 2 {
            return bad("freq_points must be at least 2".into());
        }
        for (name, noise) in [("tuning_noise", &self.tuning_noise), ("control_noise", &self.control_noise)] {
            self.noise_spec(noise, 0)
                .validate(self.fs)
                .map_err(|e| Error::Config(format!("{name}: {e}")))?;
            if noise.filter_order < 2 || noise.filter_order % 2 != 0 {
                return bad(format!("{name}.filter_order must be even and at least 2"));
            }
        }
        for (name, mu) in [
            ("tuning", self.step_sizes.tuning),
            ("auxiliary", self.step_sizes.auxiliary),
            ("control", self.step_sizes.control),
        ] {
            if !(mu.is_finite() && mu >= 0.0) {
                return bad(format!("step_sizes.{name} must be finite and non-negative"));
            }
        }
        match (&self.paths.file, self.paths.primary_len, self.paths.secondary_len) {
            (Some(_), None, None) => {}
            (Some(_), _, _) => {
                return bad("paths: give either `file` or `primary_len`/`secondary_len`, not both".into())
            }
            (None, Some(lp), Some(ls)) if lp > 0 && ls > 0 => {}
            (None, _, _) => {
                return bad("paths: `primary_len` and `secondary_len` (>= 1) are required without `file`".into())
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn path_seed(&self) -> u64 {
        self.paths.seed.unwrap_or(self.seed)
    }

    pub fn tuning_noise_spec(&self) -> NoiseSpec {
        self.noise_spec(&self.tuning_noise, 1)
    }

    pub fn control_noise_spec(&self) -> NoiseSpec {
        self.noise_spec(&self.control_noise, 2)
    }

    fn noise_spec(&self, noise: &NoiseConfig, stream: u64) -> NoiseSpec {
        NoiseSpec {
            band_lo: noise.band_lo,
            band_hi: noise.band_hi,
            amplitude: noise.amplitude,
            length: self.num_samples,
            seed: noise.seed.unwrap_or_else(|| derive_seed(self.seed, stream)),
            filter_order: noise.filter_order,
        }
    }
}
