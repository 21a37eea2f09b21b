//! Hand-arm frequency weighting (band-limiting plus a-v transition) as an
//! analog prototype and its bilinear-transformed biquad realization.
//!
//! Default constants follow the Wh weighting of ISO 5349-1 / ISO 8041:
//! band limits at 10^0.8 Hz and 10^3.1 Hz (Butterworth, Q = 1/sqrt 2) and an
//! a-v transition with f3 = f4 = 100/(2 pi) Hz, Q4 = 0.64.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{Biquad, DigitalFilter, FilterWarning};
use crate::signal::TriaxialSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightingSpec {
    /// High-pass band-limit corner (Hz).
    pub f1: f64,
    /// Low-pass band-limit corner (Hz).
    pub f2: f64,
    /// a-v transition numerator corner (Hz).
    pub f3: f64,
    /// a-v transition denominator corner (Hz).
    pub f4: f64,
    pub q4: f64,
    pub enabled: bool,
}

impl Default for WeightingSpec {
    fn default() -> Self {
        WeightingSpec {
            f1: 10f64.powf(0.8),
            f2: 10f64.powf(3.1),
            f3: 100.0 / (2.0 * PI),
            f4: 100.0 / (2.0 * PI),
            q4: 0.64,
            enabled: true,
        }
    }
}

impl WeightingSpec {
    pub fn validate(&self) -> Result<()> {
        let corners = [self.f1, self.f2, self.f3, self.f4, self.q4];
        if corners.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter(
                "weighting corners and q4 must be positive".into(),
            ));
        }
        if self.f1 >= self.f2 {
            return Err(Error::InvalidParameter(format!(
                "band limits need f1 < f2 (got {} and {})",
                self.f1, self.f2
            )));
        }
        Ok(())
    }

    fn band_high(&self, s: Complex64) -> Complex64 {
        let w = 2.0 * PI * self.f1;
        s * s / (s * s + s * (w / FRAC_1_SQRT_2) + w * w)
    }

    fn band_low(&self, s: Complex64) -> Complex64 {
        let w = 2.0 * PI * self.f2;
        Complex64::from(w * w) / (s * s + s * (w / FRAC_1_SQRT_2) + w * w)
    }

    fn transition(&self, s: Complex64) -> Complex64 {
        let w3 = 2.0 * PI * self.f3;
        let w4 = 2.0 * PI * self.f4;
        (1.0 + s / w3) / (1.0 + s / (self.q4 * w4) + s * s / (w4 * w4))
    }

    /// |W(j 2 pi f)| of the analog prototype; `with_lowpass = false` drops the
    /// upper band limit, matching what is realizable below its corner's Nyquist.
    pub fn analog_magnitude(&self, freq_hz: f64, with_lowpass: bool) -> f64 {
        let s = Complex64::new(0.0, 2.0 * PI * freq_hz);
        let mut h = self.band_high(s) * self.transition(s);
        if with_lowpass {
            h *= self.band_low(s);
        }
        h.norm()
    }
}

fn prewarp_at(corner_hz: f64, rate_hz: f64) -> f64 {
    // Corners at or above Nyquist cannot be prewarped; use the plain transform.
    if corner_hz < 0.45 * rate_hz {
        corner_hz
    } else {
        0.0
    }
}

/// Whether the designed filter includes the band-limit low-pass.
pub fn includes_lowpass(filter: &DigitalFilter) -> bool {
    !filter
        .warnings
        .iter()
        .any(|w| matches!(w, FilterWarning::ReducedBandwidth { .. }))
}

/// Discretizes the weighting at `rate_hz`. Disabled specs yield a unity filter.
pub fn design_weighting_filter(spec: &WeightingSpec, rate_hz: f64) -> Result<DigitalFilter> {
    spec.validate()?;
    if !spec.enabled {
        return Ok(DigitalFilter::unity(rate_hz));
    }
    if !(rate_hz > 2.0 * spec.f1) {
        return Err(Error::RateTooLow {
            rate_hz,
            f1: spec.f1,
        });
    }
    let nyquist = rate_hz / 2.0;
    let w1 = 2.0 * PI * spec.f1;
    let w3 = 2.0 * PI * spec.f3;
    let w4 = 2.0 * PI * spec.f4;

    let mut sections = vec![Biquad::from_analog(
        [0.0, 0.0, 1.0],
        [w1 * w1, w1 / FRAC_1_SQRT_2, 1.0],
        prewarp_at(spec.f1, rate_hz),
        rate_hz,
    )];
    let mut warnings = Vec::new();
    if spec.f2 < nyquist {
        let w2 = 2.0 * PI * spec.f2;
        sections.push(Biquad::from_analog(
            [w2 * w2, 0.0, 0.0],
            [w2 * w2, w2 / FRAC_1_SQRT_2, 1.0],
            prewarp_at(spec.f2, rate_hz),
            rate_hz,
        ));
    } else {
        warnings.push(FilterWarning::ReducedBandwidth {
            nyquist_hz: nyquist,
            corner_hz: spec.f2,
        });
    }
    sections.push(Biquad::from_analog(
        [w4 * w4, w4 * w4 / w3, 0.0],
        [w4 * w4, w4 / spec.q4, 1.0],
        prewarp_at(spec.f4, rate_hz),
        rate_hz,
    ));
    let mut filter = DigitalFilter::new(sections, rate_hz)?;
    filter.warnings = warnings;
    Ok(filter)
}

/// Filters each axis independently from rest.
pub fn apply_filter(filter: &DigitalFilter, series: &TriaxialSeries) -> Result<TriaxialSeries> {
    if filter.rate_hz != series.rate_hz() {
        return Err(Error::RateMismatch {
            left: filter.rate_hz,
            right: series.rate_hz(),
        });
    }
    Ok(series.map_axes(|x| filter.filter(x)))
}
