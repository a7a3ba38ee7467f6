//! Run configuration. One TOML file drives every subcommand; unknown keys
//! are rejected at every level.
//!
//! ```toml
//! models = ["exact", "gaussian"]
//! measures = ["bm", "chsh", "bprv"]
//!
//! [scene]
//! a = 1.0
//! r_a = 4.0
//! r_b = 2.0
//! m = 10
//! d = "infinite"
//! seed = 1
//!
//! [time_grid]
//! t_max = 4.0
//! unit = "tau_e"
//! n_steps = 400
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Scaling;
use crate::constants::PhysicalConstants;
use crate::dynamics::{Model, DEFAULT_STATE_VECTOR_CAP};
use crate::error::{Error, Result};
use crate::geometry::SceneConfig;
use crate::measures::{Measure, PairSummation};
use crate::spectra::{FlipSource, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Fs,
    TauE,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeGridConfig {
    pub t_max: f64,
    pub unit: TimeUnit,
    /// Number of grid points including `t = 0`.
    pub n_steps: usize,
}

impl Default for TimeGridConfig {
    fn default() -> Self {
        TimeGridConfig {
            t_max: 4.0,
            unit: TimeUnit::TauE,
            n_steps: 400,
        }
    }
}

impl TimeGridConfig {
    /// Grid end in fs for a scene with the given `τ_E`.
    pub fn t_max_fs(&self, tau_e: f64) -> Result<f64> {
        match self.unit {
            TimeUnit::Fs => Ok(self.t_max),
            TimeUnit::TauE if tau_e.is_finite() => Ok(self.t_max * tau_e),
            TimeUnit::TauE => Err(Error::config(
                "time_grid.unit",
                "tau_E is infinite for this scene (no environment coupling); use unit = \"fs\"",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    pub enumeration_cap: usize,
    pub state_vector_cap: usize,
    /// Keep environment-environment terms in the numerical energy table.
    pub include_env_env: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            state_vector_cap: DEFAULT_STATE_VECTOR_CAP,
            include_env_env: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementConfig {
    pub bm_pairs: PairSummation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    /// Runs per radius ratio.
    pub n_runs: usize,
    /// `R_A/R_B` values; empty means the ratio of `scene`.
    pub radius_ratios: Vec<f64>,
    /// Model whose correlation curves are collapsed.
    pub model: Model,
    pub collapse_measure: Measure,
    /// Defaults to the classical boundary of `collapse_measure`.
    pub collapse_threshold: Option<f64>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_runs: 10,
            radius_ratios: Vec::new(),
            model: Model::Exact,
            collapse_measure: Measure::Bm,
            collapse_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterConfig {
    pub ratios: Vec<f64>,
    pub n_per_ratio: usize,
    /// Samples on the `τ_E = τ/√2` reference line.
    pub reference_points: usize,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        ScatterConfig {
            ratios: vec![0.5, 1.0, 2.0],
            n_per_ratio: 100,
            reference_points: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistogramConfig {
    /// Defaults to `⌈√count⌉`, at most 101.
    pub n_bins: Option<usize>,
    pub source: FlipSource,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            n_bins: None,
            source: FlipSource::DoubleFlip,
        }
    }
}

/// Input to the log-log linearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearizeSource {
    Numerical,
    Exact,
    Gaussian,
    /// `f = exp(−t/τ_E)`: a Markovian decay for comparison.
    Exponential,
}

impl From<Model> for LinearizeSource {
    fn from(m: Model) -> Self {
        match m {
            Model::Numerical => LinearizeSource::Numerical,
            Model::Exact => LinearizeSource::Exact,
            Model::Gaussian => LinearizeSource::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearizeConfig {
    pub source: LinearizeSource,
    /// Fit valid points with `t <= window_tau_e·τ_E`.
    pub window_tau_e: f64,
    /// If set, fit this fraction of the earliest valid points instead.
    pub window_fraction: Option<f64>,
}

impl Default for LinearizeConfig {
    fn default() -> Self {
        LinearizeConfig {
            source: LinearizeSource::Exact,
            window_tau_e: 0.25,
            window_fraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub time_grid: TimeGridConfig,
    pub models: Vec<Model>,
    pub measures: Vec<Measure>,
    /// Output directory; not part of the manifest echo.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub constants: PhysicalConstants,
    pub limits: Limits,
    pub measurement: MeasurementConfig,
    pub ensemble: EnsembleConfig,
    pub scatter: ScatterConfig,
    pub histogram: HistogramConfig,
    pub linearize: LinearizeConfig,
    /// Scaling used for the headline collapse statistic.
    pub collapse_scaling: Scaling,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scene: SceneConfig::default(),
            time_grid: TimeGridConfig::default(),
            models: vec![Model::Exact, Model::Gaussian],
            measures: Measure::ALL.to_vec(),
            output: None,
            constants: PhysicalConstants::default(),
            limits: Limits::default(),
            measurement: MeasurementConfig::default(),
            ensemble: EnsembleConfig::default(),
            scatter: ScatterConfig::default(),
            histogram: HistogramConfig::default(),
            linearize: LinearizeConfig::default(),
            collapse_scaling: Scaling::TauE,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let span = e
                .span()
                .map(|s| format!(" at byte {}", s.start))
                .unwrap_or_default();
            Error::config("config", format!("{}{span}", e.message()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The config with the output directory stripped, as echoed in manifests.
    pub fn echo(&self) -> String {
        RunConfig {
            output: None,
            ..self.clone()
        }
        .to_toml()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.constants.validate()?;
        let tg = &self.time_grid;
        if tg.n_steps < 2 {
            return Err(Error::config("time_grid.n_steps", "must be >= 2"));
        }
        if !(tg.t_max.is_finite() && tg.t_max > 0.0) {
            return Err(Error::config("time_grid.t_max", "must be finite and > 0"));
        }
        if self.models.is_empty() {
            return Err(Error::config("models", "select at least one model"));
        }
        if has_duplicates(&self.models) {
            return Err(Error::config("models", "duplicate entries"));
        }
        if has_duplicates(&self.measures) {
            return Err(Error::config("measures", "duplicate entries"));
        }
        if self.ensemble.n_runs == 0 {
            return Err(Error::config("ensemble.n_runs", "must be >= 1"));
        }
        check_ratios("ensemble.radius_ratios", &self.ensemble.radius_ratios)?;
        if let Some(t) = self.ensemble.collapse_threshold {
            if !t.is_finite() {
                return Err(Error::config(
                    "ensemble.collapse_threshold",
                    "must be finite",
                ));
            }
        }
        if self.scatter.n_per_ratio == 0 {
            return Err(Error::config("scatter.n_per_ratio", "must be >= 1"));
        }
        if self.scatter.ratios.is_empty() {
            return Err(Error::config("scatter.ratios", "must not be empty"));
        }
        check_ratios("scatter.ratios", &self.scatter.ratios)?;
        if self.histogram.n_bins == Some(0) {
            return Err(Error::config("histogram.n_bins", "must be >= 1"));
        }
        let lin = &self.linearize;
        if !(lin.window_tau_e.is_finite() && lin.window_tau_e > 0.0) {
            return Err(Error::config(
                "linearize.window_tau_e",
                "must be finite and > 0",
            ));
        }
        if let Some(f) = lin.window_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::config(
                    "linearize.window_fraction",
                    "must lie in (0, 1]",
                ));
            }
        }
        Ok(())
    }

    /// Measurement settings for the generic evaluators.
    pub fn measurement_settings(&self) -> crate::measures::MeasurementSettings {
        crate::measures::MeasurementSettings {
            bm_pairs: self.measurement.bm_pairs,
            ..Default::default()
        }
    }
}

fn has_duplicates<T: Ord + Copy>(v: &[T]) -> bool {
    let mut s = v.to_vec();
    s.sort();
    s.windows(2).any(|w| w[0] == w[1])
}

fn check_ratios(field: &str, ratios: &[f64]) -> Result<()> {
    match ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        Some(r) => Err(Error::config(
            field,
            format!("ratio {r} must be finite and > 0"),
        )),
        None => Ok(()),
    }
}
