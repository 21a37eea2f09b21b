use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::{Thresholds, EIGHT_HOURS_S};
use crate::gravity::GravityEstimatorConfig;
use crate::signal::{Location, TrailingPolicy};
use crate::stats::SIGNIFICANCE_LEVEL;
use crate::synth::ExperimentConfig;
use crate::sysid::FitOptions;
use crate::weighting::WeightingSpec;

/// Environment variable naming a config file when no `--config` flag is given.
pub const CONFIG_ENV: &str = "HAV_CONFIG";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GravityScope {
    /// One estimator runs across the whole recording.
    #[default]
    Run,
    /// The estimator restarts at every segment.
    Segment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SysidConfig {
    /// Shared order for B, A, C and D.
    pub order: usize,
    pub options: FitOptions,
    pub remove_gravity: bool,
    pub weighted: bool,
    /// Fit each analysis window separately instead of the whole recording.
    pub per_segment: bool,
    /// (input axis, output axis) pairs, 0 = x.
    pub pairing: Vec<[usize; 2]>,
    pub frequency_points: usize,
    /// Decimate the faster recording when the rates differ by an integer factor.
    pub decimate_to_match: bool,
}

impl Default for SysidConfig {
    fn default() -> Self {
        SysidConfig {
            order: 20,
            options: FitOptions::default(),
            remove_gravity: true,
            weighted: false,
            per_segment: false,
            pairing: vec![[0, 0], [1, 1], [2, 2]],
            frequency_points: 101,
            decimate_to_match: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub significance: f64,
    pub paired: Vec<[Location; 2]>,
    /// (predictor, response) pairs.
    pub regressions: Vec<[Location; 2]>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        use Location::*;
        StatsConfig {
            significance: SIGNIFICANCE_LEVEL,
            paired: vec![[HandRT, Tool], [UpperArmRT, NearUpperArmRT]],
            regressions: vec![
                [HandRT, ForearmRT],
                [ForearmRT, UpperArmRT],
                [HandLT, ForearmLT],
                [ForearmLT, UpperArmLT],
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub gravity: GravityEstimatorConfig,
    pub gravity_scope: GravityScope,
    pub weighting: WeightingSpec,
    pub window_s: f64,
    pub trailing: TrailingPolicy,
    /// Daily exposure duration used for A(8), seconds.
    pub exposure_s: f64,
    pub thresholds: Thresholds,
    pub sysid: SysidConfig,
    pub stats: StatsConfig,
    pub synth: ExperimentConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            gravity: GravityEstimatorConfig::default(),
            gravity_scope: GravityScope::Run,
            weighting: WeightingSpec::default(),
            window_s: 10.0,
            trailing: TrailingPolicy::Drop,
            exposure_s: EIGHT_HOURS_S,
            thresholds: Thresholds::default(),
            sysid: SysidConfig::default(),
            stats: StatsConfig::default(),
            synth: ExperimentConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.gravity.validate().map_err(wrap)?;
        self.weighting.validate().map_err(wrap)?;
        self.thresholds.validate().map_err(wrap)?;
        self.synth.validate().map_err(wrap)?;
        if !(self.window_s > 0.0 && self.window_s.is_finite()) {
            return Err(Error::Config(format!("window_s must be positive, got {}", self.window_s)));
        }
        if !(self.exposure_s > 0.0) {
            return Err(Error::Config(format!("exposure_s must be positive, got {}", self.exposure_s)));
        }
        if self.sysid.order == 0 {
            return Err(Error::Config("sysid.order must be at least 1".into()));
        }
        if self.sysid.pairing.is_empty() || self.sysid.pairing.iter().flatten().any(|a| *a > 2) {
            return Err(Error::Config("sysid.pairing needs axis indices in 0..=2".into()));
        }
        if !(self.stats.significance > 0.0 && self.stats.significance < 1.0) {
            return Err(Error::Config(format!("stats.significance {} outside (0, 1)", self.stats.significance)));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: AnalysisConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Context {
            context: path.display().to_string(),
            source: Box::new(e),
        })
    }

    /// Explicit path, else the file named by [`CONFIG_ENV`], else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<(Self, Option<PathBuf>)> {
        let path = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        match path {
            Some(p) => Ok((Self::load(&p)?, Some(p))),
            None => Ok((Self::default(), None)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let c = AnalysisConfig::default();
        assert_eq!(c.gravity.beta, 0.05);
        assert_eq!(c.window_s, 10.0);
        assert_eq!(c.sysid.order, 20);
        assert_eq!(c.sysid.options.input_delay, 1);
        assert_eq!(c.stats.significance, 0.05);
        c.validate().unwrap();
    }

    #[test]
    fn toml_roundtrip_and_partial_files() {
        let c = AnalysisConfig::default();
        assert_eq!(AnalysisConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        let partial = "window_s = 5.0\n[gravity]\nbeta = 0.1\n[sysid]\norder = 4\n";
        let p = AnalysisConfig::from_toml(partial).unwrap();
        assert_eq!((p.window_s, p.gravity.beta, p.sysid.order), (5.0, 0.1, 4));
        assert_eq!(p.thresholds, Thresholds::default());
    }

    #[test]
    fn invalid_configs() {
        assert!(matches!(AnalysisConfig::from_toml("window_s = -1.0"), Err(Error::Config(_))));
        assert!(matches!(AnalysisConfig::from_toml("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(AnalysisConfig::from_toml("[gravity]\nbeta = 2.0"), Err(Error::Config(_))));
    }
}
