//! Second-order-section IIR filters and the small set of analog prototypes
//! the rest of the crate discretizes (bilinear transform with prewarping).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One normalized biquad: `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub const UNITY: Biquad = Biquad {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    pub fn gain(g: f64) -> Self {
        Biquad {
            b0: g,
            ..Self::UNITY
        }
    }

    /// Bilinear transform of `(n2 s^2 + n1 s + n0) / (d2 s^2 + d1 s + d0)` with
    /// the frequency axis prewarped so that `prewarp_hz` maps exactly.
    pub fn from_analog(num: [f64; 3], den: [f64; 3], prewarp_hz: f64, rate_hz: f64) -> Self {
        let k = warp_constant(prewarp_hz, rate_hz);
        let [n0, n1, n2] = num;
        let [d0, d1, d2] = den;
        let k2 = k * k;
        if d2 == 0.0 && n2 == 0.0 {
            // first order: multiply through by (1 + z^-1) only
            let a0 = d1 * k + d0;
            return Biquad {
                b0: (n1 * k + n0) / a0,
                b1: (n0 - n1 * k) / a0,
                b2: 0.0,
                a1: (d0 - d1 * k) / a0,
                a2: 0.0,
            };
        }
        let a0 = d2 * k2 + d1 * k + d0;
        Biquad {
            b0: (n2 * k2 + n1 * k + n0) / a0,
            b1: (2.0 * n0 - 2.0 * n2 * k2) / a0,
            b2: (n2 * k2 - n1 * k + n0) / a0,
            a1: (2.0 * d0 - 2.0 * d2 * k2) / a0,
            a2: (d2 * k2 - d1 * k + d0) / a0,
        }
    }

    /// Poles strictly inside the unit circle (Jury conditions for a quadratic).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    pub fn response(&self, freq_hz: f64, rate_hz: f64) -> Complex64 {
        let zi = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / rate_hz);
        let zi2 = zi * zi;
        (self.b0 + self.b1 * zi + self.b2 * zi2) / (1.0 + self.a1 * zi + self.a2 * zi2)
    }
}

/// Prewarped bilinear constant `K = w / tan(w T / 2)`; falls back to `2 fs` at DC.
fn warp_constant(prewarp_hz: f64, rate_hz: f64) -> f64 {
    if prewarp_hz <= 0.0 {
        return 2.0 * rate_hz;
    }
    let w = 2.0 * PI * prewarp_hz;
    w / (w / (2.0 * rate_hz)).tan()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FilterWarning {
    /// The band-limiting low-pass corner lies above Nyquist and was replaced by unity.
    ReducedBandwidth { nyquist_hz: f64, corner_hz: f64 },
}

impl std::fmt::Display for FilterWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FilterWarning::ReducedBandwidth {
                nyquist_hz,
                corner_hz,
            } => write!(
                f,
                "ReducedBandwidth: Nyquist {nyquist_hz:.1} Hz is below the {corner_hz:.1} Hz band-limit corner; low-pass omitted"
            ),
        }
    }
}

/// Cascade of biquads at a fixed sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitalFilter {
    pub sections: Vec<Biquad>,
    pub rate_hz: f64,
    #[serde(default)]
    pub warnings: Vec<FilterWarning>,
}

impl DigitalFilter {
    pub fn new(sections: Vec<Biquad>, rate_hz: f64) -> Result<Self> {
        if !(rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("rate {rate_hz}")));
        }
        if let Some(i) = sections.iter().position(|s| !s.is_stable()) {
            return Err(Error::UnstableStage(format!("section {i}")));
        }
        Ok(DigitalFilter {
            sections,
            rate_hz,
            warnings: Vec::new(),
        })
    }

    pub fn unity(rate_hz: f64) -> Self {
        DigitalFilter {
            sections: vec![Biquad::UNITY],
            rate_hz,
            warnings: Vec::new(),
        }
    }

    /// Butterworth low-pass of even `order` (2 or more), prewarped at `corner_hz`.
    pub fn butterworth_lowpass(order: usize, corner_hz: f64, rate_hz: f64) -> Result<Self> {
        if order == 0 || !order.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "Butterworth order must be even, got {order}"
            )));
        }
        if !(corner_hz > 0.0 && corner_hz < rate_hz / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "corner {corner_hz} Hz outside (0, {}) Hz",
                rate_hz / 2.0
            )));
        }
        let w = 2.0 * PI * corner_hz;
        let sections = (0..order / 2)
            .map(|k| {
                let theta = PI * (2 * k + 1) as f64 / (2 * order) as f64;
                let q = 1.0 / (2.0 * theta.sin());
                Biquad::from_analog([w * w, 0.0, 0.0], [w * w, w / q, 1.0], corner_hz, rate_hz)
            })
            .collect();
        Self::new(sections, rate_hz)
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }

    pub fn response(&self, freq_hz: f64) -> Complex64 {
        self.sections
            .iter()
            .map(|s| s.response(freq_hz, self.rate_hz))
            .product()
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    /// Runs one channel through the cascade from rest (transposed direct form II).
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b0 * input + z1;
                z1 = s.b1 * input - s.a1 * out + z2;
                z2 = s.b2 * input - s.a2 * out;
                *v = out;
            }
        }
        y
    }
}

/// Direct rational filter `y = (b / a) x` from rest; `a[0]` must be nonzero.
pub fn lfilter(b: &[f64], a: &[f64], x: &[f64]) -> Vec<f64> {
    let a0 = a[0];
    let order = b.len().max(a.len());
    let bn: Vec<f64> = (0..order)
        .map(|i| b.get(i).copied().unwrap_or(0.0) / a0)
        .collect();
    let an: Vec<f64> = (0..order)
        .map(|i| a.get(i).copied().unwrap_or(0.0) / a0)
        .collect();
    let mut state = vec![0.0; order];
    let mut y = Vec::with_capacity(x.len());
    for &xi in x {
        let yi = bn[0] * xi + state[0];
        for k in 1..order {
            let next = if k < order - 1 { state[k] } else { 0.0 };
            state[k - 1] = bn[k] * xi - an[k] * yi + next;
        }
        y.push(yi);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn butterworth_half_power_at_corner() {
        for order in [2, 4, 6] {
            let f = DigitalFilter::butterworth_lowpass(order, 50.0, 400.0).unwrap();
            assert!((f.magnitude(50.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
            assert!((f.magnitude(0.0) - 1.0).abs() < 1e-12);
            assert!(f.magnitude(199.999) < 1e-6);
        }
    }

    #[test]
    fn odd_order_rejected() {
        assert!(DigitalFilter::butterworth_lowpass(3, 50.0, 400.0).is_err());
        assert!(DigitalFilter::butterworth_lowpass(2, 250.0, 400.0).is_err());
    }

    #[test]
    fn unstable_section_rejected() {
        let bad = Biquad {
            a1: 0.0,
            a2: 1.2,
            ..Biquad::UNITY
        };
        assert!(matches!(
            DigitalFilter::new(vec![bad], 100.0),
            Err(Error::UnstableStage(_))
        ));
    }

    #[test]
    fn lfilter_matches_biquad_cascade() {
        let f = DigitalFilter::butterworth_lowpass(2, 30.0, 400.0).unwrap();
        let s = f.sections[0];
        let x: Vec<f64> = (0..200).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let a = f.filter(&x);
        let b = lfilter(&[s.b0, s.b1, s.b2], &[1.0, s.a1, s.a2], &x);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn lfilter_geometric_impulse() {
        let mut x = vec![0.0; 10];
        x[0] = 1.0;
        let y = lfilter(&[1.0], &[1.0, -0.5], &x);
        for (i, v) in y.iter().enumerate() {
            assert!((v - 0.5f64.powi(i as i32)).abs() < 1e-15);
        }
    }
}
