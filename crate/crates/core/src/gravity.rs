//! Gravity removal with an exponential-moving-average estimate of the static
//! component: `g(i) = beta * a(i) + (1 - beta) * g(i-1)`, `a_dyn(i) = a(i) - g(i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Sample, TriaxialSeries};

pub const DEFAULT_BETA: f64 = 0.05;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    #[default]
    /// Seed the estimate with the first sample (tool held still before use).
    FirstSample,
    Zero,
    Given([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GravityEstimatorConfig {
    pub beta: f64,
    pub init_policy: InitPolicy,
}

impl Default for GravityEstimatorConfig {
    fn default() -> Self {
        GravityEstimatorConfig {
            beta: DEFAULT_BETA,
            init_policy: InitPolicy::FirstSample,
        }
    }
}

impl GravityEstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if let InitPolicy::Given(g) = self.init_policy {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite initial gravity".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GravityEstimatorState {
    pub g_est: [f64; 3],
}

impl GravityEstimatorState {
    pub fn initial(policy: InitPolicy, first: Sample) -> Self {
        let g_est = match policy {
            InitPolicy::FirstSample => first,
            InitPolicy::Zero => [0.0; 3],
            InitPolicy::Given(g) => g,
        };
        GravityEstimatorState { g_est }
    }
}

#[inline]
pub fn estimate_gravity_step(state: GravityEstimatorState, sample: Sample, beta: f64) -> GravityEstimatorState {
    let mut g_est = state.g_est;
    for (g, a) in g_est.iter_mut().zip(sample) {
        *g += beta * (a - *g);
    }
    GravityEstimatorState { g_est }
}

/// Returns the dynamic acceleration of `series`.
pub fn remove_gravity(series: &TriaxialSeries, config: &GravityEstimatorConfig) -> Result<TriaxialSeries> {
    config.validate()?;
    Ok(series.with_samples(remove_gravity_samples(series.samples(), config)))
}

pub(crate) fn remove_gravity_samples(samples: &[Sample], config: &GravityEstimatorConfig) -> Vec<Sample> {
    let Some(&first) = samples.first() else {
        return Vec::new();
    };
    // Run on the residual itself, a_dyn(i) = (1 - beta) (a(i) - a(i-1) + a_dyn(i-1)),
    // so a decaying residual keeps its relative precision instead of
    // cancelling against an estimate close to a.
    let g0 = GravityEstimatorState::initial(config.init_policy, first).g_est;
    let mut dynamic = [first[0] - g0[0], first[1] - g0[1], first[2] - g0[2]];
    let mut prev = first;
    let keep = 1.0 - config.beta;
    samples
        .iter()
        .map(|&a| {
            for k in 0..3 {
                dynamic[k] = keep * ((a[k] - prev[k]) + dynamic[k]);
            }
            prev = a;
            dynamic
        })
        .collect()
}
