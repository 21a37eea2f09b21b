//! Fixtures shared by the benchmarks.

use hav_core::synth::{make_experiment, ExperimentConfig};
use hav_core::{Location, TriaxialSeries};

/// Observed hand and upper-arm recordings of a default synthetic run.
pub fn hand_and_upper_arm(duration_s: f64, seed: u64) -> (TriaxialSeries, TriaxialSeries) {
    let mut config = ExperimentConfig::default();
    config.tool.duration_s = duration_s;
    let bundle = make_experiment(&config, seed).expect("default experiment is valid");
    let get = |loc| bundle.observed(loc).expect("default sensors cover both locations").clone();
    (get(Location::HandRT), get(Location::UpperArmRT))
}
