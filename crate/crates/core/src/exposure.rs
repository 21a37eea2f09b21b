//! Per-axis RMS, vibration total value, daily exposure A(8) and the
//! action/limit assessment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference duration for A(8), seconds.
pub const EIGHT_HOURS_S: f64 = 28_800.0;

pub fn axis_rms(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySegment);
    }
    let sum_sq: f64 = samples.iter().map(|v| v * v).sum();
    Ok((sum_sq / samples.len() as f64).sqrt())
}

pub fn vibration_total(x: f64, y: f64, z: f64) -> Result<f64> {
    for c in [x, y, z] {
        if c < 0.0 || c.is_nan() {
            return Err(Error::NegativeComponent(c));
        }
    }
    Ok((x * x + y * y + z * z).sqrt())
}

pub fn daily_exposure(ahv: f64, exposure_s: f64, reference_s: f64) -> Result<f64> {
    if !(exposure_s > 0.0 && reference_s > 0.0) {
        return Err(Error::NonPositiveDuration);
    }
    if ahv < 0.0 || ahv.is_nan() {
        return Err(Error::NegativeComponent(ahv));
    }
    if exposure_s == reference_s {
        return Ok(ahv);
    }
    Ok(ahv * (exposure_s / reference_s).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub action: f64,
    pub limit: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            action: 2.5,
            limit: 5.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.action > 0.0 && self.action < self.limit) {
            return Err(Error::InvalidThresholds {
                action: self.action,
                limit: self.limit,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Assessment {
    BelowAction,
    AboveAction,
    AboveLimit,
}

/// Boundary values fall into the higher category.
pub fn assess_limits(a8: f64, thresholds: &Thresholds) -> Result<Assessment> {
    thresholds.validate()?;
    Ok(if a8 < thresholds.action {
        Assessment::BelowAction
    } else if a8 < thresholds.limit {
        Assessment::AboveAction
    } else {
        Assessment::AboveLimit
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRms {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub n: usize,
}

impl AxisRms {
    pub fn from_axes(x: &[f64], y: &[f64], z: &[f64]) -> Result<Self> {
        Ok(AxisRms {
            x: axis_rms(x)?,
            y: axis_rms(y)?,
            z: axis_rms(z)?,
            n: x.len(),
        })
    }

    pub fn total(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn max_component(&self) -> f64 {
        self.x.max(self.y).max(self.z)
    }
}

/// Exposure figures for one analysis segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureReport {
    pub segment: usize,
    pub start_index: usize,
    pub duration_s: f64,
    /// RMS of the gravity-free signal without frequency weighting.
    pub unweighted: AxisRms,
    /// RMS after frequency weighting, when weighting is enabled.
    pub weighted: Option<AxisRms>,
    /// Vibration total value from the weighted RMS when available.
    pub ahv: f64,
    pub ahv_unweighted: f64,
    pub a8: f64,
    pub assessment: Assessment,
    pub thresholds: Thresholds,
}

impl ExposureReport {
    pub fn build(
        segment: usize,
        start_index: usize,
        duration_s: f64,
        unweighted: AxisRms,
        weighted: Option<AxisRms>,
        exposure_s: f64,
        thresholds: Thresholds,
    ) -> Result<Self> {
        let ahv_unweighted = vibration_total(unweighted.x, unweighted.y, unweighted.z)?;
        let ahv = match &weighted {
            Some(w) => vibration_total(w.x, w.y, w.z)?,
            None => ahv_unweighted,
        };
        let a8 = daily_exposure(ahv, exposure_s, EIGHT_HOURS_S)?;
        Ok(ExposureReport {
            segment,
            start_index,
            duration_s,
            unweighted,
            weighted,
            ahv,
            ahv_unweighted,
            a8,
            assessment: assess_limits(a8, &thresholds)?,
            thresholds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rms_cases() {
        assert_eq!(axis_rms(&[-2.5; 7]).unwrap(), 2.5);
        assert!((axis_rms(&[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert!((axis_rms(&[3.0, 4.0]).unwrap() - 3.535534).abs() < 1e-6);
        assert_eq!(axis_rms(&[0.0; 4]).unwrap(), 0.0);
        assert!(matches!(axis_rms(&[]), Err(Error::EmptySegment)));
    }

    #[test]
    fn total_cases() {
        assert_eq!(vibration_total(3.0, 4.0, 0.0).unwrap(), 5.0);
        assert_eq!(vibration_total(1.7, 0.0, 0.0).unwrap(), 1.7);
        assert_eq!(vibration_total(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(matches!(vibration_total(1.0, -1.0, 0.0), Err(Error::NegativeComponent(_))));
    }

    #[test]
    fn daily_exposure_cases() {
        assert_eq!(daily_exposure(2.5, 8.0 * 3600.0, EIGHT_HOURS_S).unwrap(), 2.5);
        assert_eq!(daily_exposure(5.0, 2.0 * 3600.0, EIGHT_HOURS_S).unwrap(), 2.5);
        assert_eq!(daily_exposure(0.0, 100.0, EIGHT_HOURS_S).unwrap(), 0.0);
        assert!(matches!(daily_exposure(1.0, 0.0, EIGHT_HOURS_S), Err(Error::NonPositiveDuration)));
    }

    #[test]
    fn assessment_cases() {
        let t = Thresholds::default();
        assert_eq!(assess_limits(1.0, &t).unwrap(), Assessment::BelowAction);
        assert_eq!(assess_limits(2.5, &t).unwrap(), Assessment::AboveAction);
        assert_eq!(assess_limits(5.0, &t).unwrap(), Assessment::AboveLimit);
        assert_eq!(assess_limits(7.0, &t).unwrap(), Assessment::AboveLimit);
        let bad = Thresholds { action: 5.0, limit: 2.5 };
        assert!(matches!(assess_limits(1.0, &bad), Err(Error::InvalidThresholds { .. })));
    }

    #[test]
    fn report_uses_weighted_when_present() {
        let u = AxisRms { x: 3.0, y: 4.0, z: 0.0, n: 10 };
        let w = AxisRms { x: 1.0, y: 0.0, z: 0.0, n: 10 };
        let r = ExposureReport::build(0, 0, 10.0, u, Some(w), EIGHT_HOURS_S, Thresholds::default()).unwrap();
        assert_eq!(r.ahv, 1.0);
        assert_eq!(r.ahv_unweighted, 5.0);
        assert_eq!(r.a8, 1.0);
        assert_eq!(r.assessment, Assessment::BelowAction);
    }

    proptest! {
        #[test]
        fn rms_scale_equivariant(v in proptest::collection::vec(-100.0f64..100.0, 1..64), k in -10.0f64..10.0) {
            let scaled: Vec<f64> = v.iter().map(|x| k * x).collect();
            let lhs = axis_rms(&scaled).unwrap();
            let rhs = k.abs() * axis_rms(&v).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn total_symmetric_monotone_bounded(x in 0.0f64..50.0, y in 0.0f64..50.0, z in 0.0f64..50.0, dx in 0.0f64..5.0) {
            let t = vibration_total(x, y, z).unwrap();
            for p in [(y, z, x), (z, x, y), (y, x, z)] {
                prop_assert!((vibration_total(p.0, p.1, p.2).unwrap() - t).abs() <= 1e-12 * t.max(1.0));
            }
            prop_assert!(vibration_total(x + dx, y, z).unwrap() >= t);
            let m = x.max(y).max(z);
            prop_assert!(t >= m && t <= 3f64.sqrt() * m * (1.0 + 1e-12));
        }

        #[test]
        fn daily_exposure_monotone(a in 0.0f64..20.0, da in 0.0f64..5.0, t in 1.0f64..30000.0, dt in 0.0f64..1000.0) {
            prop_assert_eq!(daily_exposure(a, EIGHT_HOURS_S, EIGHT_HOURS_S).unwrap(), a);
            let base = daily_exposure(a, t, EIGHT_HOURS_S).unwrap();
            prop_assert!(daily_exposure(a + da, t, EIGHT_HOURS_S).unwrap() >= base);
            prop_assert!(daily_exposure(a, t + dt, EIGHT_HOURS_S).unwrap() >= base);
        }
    }
}
