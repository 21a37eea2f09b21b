//! Hand-arm vibration exposure analysis and transfer-function identification
//! for body-worn triaxial accelerometers.
//!
//! The pipeline removes gravity with an exponential moving average, applies
//! the hand-arm frequency weighting, splits recordings into fixed windows and
//! reports per-axis RMS, the vibration total value and the daily exposure
//! A(8). Transmission between two body locations is modeled with Box-Jenkins
//! models fitted by prediction-error minimization. A seeded synthetic
//! experiment generator provides ground truth for every stage.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exposure;
pub mod filter;
pub mod gravity;
pub mod io;
pub mod signal;
pub mod stats;
pub mod synth;
pub mod sysid;
pub mod weighting;

pub use error::{Error, Result, ResultExt};
pub use exposure::{assess_limits, axis_rms, daily_exposure, vibration_total, Assessment, AxisRms, ExposureReport, Thresholds};
pub use filter::{DigitalFilter, FilterWarning};
pub use gravity::{remove_gravity, GravityEstimatorConfig, InitPolicy};
pub use signal::{decimate, segment, Location, Sample, Segment, SensorMeta, TrailingPolicy, TriaxialSeries, STANDARD_GRAVITY};
pub use stats::{linear_regression, paired_t_test, RegressionResult, TTestResult};
pub use sysid::{fit_bj, order_sweep, BoxJenkinsModel, FitOptions, FitReport, Orders};
pub use weighting::{design_weighting_filter, WeightingSpec};
