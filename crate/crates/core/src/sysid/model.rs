use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::Polynomial;
use crate::error::{Error, Result};
use crate::filter::lfilter;

/// `y(t) = B(q)/A(q) u(t - delay) + C(q)/D(q) e(t)`.
///
/// The system denominator is called `A` here; it plays the role usually
/// written `F` in Box-Jenkins literature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxJenkinsModel {
    pub b: Polynomial,
    pub a: Polynomial,
    pub c: Polynomial,
    pub d: Polynomial,
    pub input_delay: usize,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionTrace {
    pub y_measured: Vec<f64>,
    pub y_simulated: Vec<f64>,
    pub y_predicted: Vec<f64>,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub freq_hz: f64,
    pub gain_g: f64,
    pub gain_h: f64,
}

impl BoxJenkinsModel {
    pub fn new(b: Vec<f64>, a: Vec<f64>, c: Vec<f64>, d: Vec<f64>, input_delay: usize, rate_hz: f64) -> Result<Self> {
        let monic = |v: Vec<f64>, name: &str| -> Result<Polynomial> {
            match v.first() {
                Some(&1.0) => Ok(Polynomial::monic(&v[1..])),
                _ => Err(Error::InvalidParameter(format!("{name} must be monic"))),
            }
        };
        let m = BoxJenkinsModel {
            b: Polynomial::new(b)?,
            a: monic(a, "A")?,
            c: monic(c, "C")?,
            d: monic(d, "D")?,
            input_delay,
            rate_hz,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [&self.b, &self.a, &self.c, &self.d] {
            p.validate()?;
        }
        if !(self.a.monic && self.c.monic && self.d.monic) {
            return Err(Error::InvalidParameter("A, C and D must be monic".into()));
        }
        if !(self.rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("rate_hz {}", self.rate_hz)));
        }
        Ok(())
    }

    fn delayed(&self, u: &[f64]) -> Vec<f64> {
        let d = self.input_delay.min(u.len());
        let mut out = vec![0.0; d];
        out.extend_from_slice(&u[..u.len() - d]);
        out
    }

    fn require_stable_system(&self) -> Result<()> {
        if !self.a.is_stable() {
            return Err(Error::UnstableModel("system denominator A".into()));
        }
        Ok(())
    }

    /// Noise-free output `B/A u(t - delay)` from rest.
    pub fn simulate(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        if u.is_empty() {
            return Err(Error::EmptyInput);
        }
        self.require_stable_system()?;
        Ok(lfilter(&self.b.coeffs, &self.a.coeffs, &self.delayed(u)))
    }

    /// One-step-ahead innovations `e = y - y_hat`.
    pub fn residuals(&self, u: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let yhat = self.predict_one_step(u, y)?;
        Ok(y.iter().zip(&yhat).map(|(a, b)| a - b).collect())
    }

    /// `y_hat(t|t-1) = H^-1 G u + (1 - H^-1) y` from rest, evaluated as
    /// `G u + (C - D)/C (y - G u)` so an identity noise model reproduces the
    /// simulation exactly.
    pub fn predict_one_step(&self, u: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        if u.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: u.len(),
                right: y.len(),
            });
        }
        if !self.c.is_stable() {
            return Err(Error::NonInvertibleNoiseModel);
        }
        let w = self.simulate(u)?;
        let v: Vec<f64> = y.iter().zip(&w).map(|(a, b)| a - b).collect();
        let len = self.c.coeffs.len().max(self.d.coeffs.len());
        let diff: Vec<f64> = (0..len)
            .map(|i| self.c.coeffs.get(i).unwrap_or(&0.0) - self.d.coeffs.get(i).unwrap_or(&0.0))
            .collect();
        let correction = lfilter(&diff, &self.c.coeffs, &v);
        Ok(w.iter().zip(&correction).map(|(a, b)| a + b).collect())
    }

    pub fn prediction_trace(&self, u: &[f64], y: &[f64]) -> Result<PredictionTrace> {
        let y_simulated = self.simulate(u)?;
        let y_predicted = self.predict_one_step(u, y)?;
        let residuals = y.iter().zip(&y_predicted).map(|(a, b)| a - b).collect();
        Ok(PredictionTrace {
            y_measured: y.to_vec(),
            y_simulated,
            y_predicted,
            residuals,
        })
    }

    pub fn gain_at(&self, freq_hz: f64) -> Result<GainPoint> {
        let nyquist = self.rate_hz / 2.0;
        if !(0.0..=nyquist).contains(&freq_hz) {
            return Err(Error::FrequencyOutOfRange { freq_hz, nyquist_hz: nyquist });
        }
        let zinv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / self.rate_hz);
        Ok(GainPoint {
            freq_hz,
            gain_g: (self.b.eval(zinv) / self.a.eval(zinv)).norm(),
            gain_h: (self.c.eval(zinv) / self.d.eval(zinv)).norm(),
        })
    }

    /// |G| and |H| on the unit circle at each requested frequency.
    pub fn frequency_response(&self, freqs_hz: &[f64]) -> Result<Vec<GainPoint>> {
        freqs_hz.iter().map(|&f| self.gain_at(f)).collect()
    }
}

/// `n` evenly spaced frequencies covering `[0, rate/2]`.
pub fn linear_frequency_grid(rate_hz: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|k| rate_hz / 2.0 * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(b: &[f64], a: &[f64], c: &[f64], d: &[f64]) -> BoxJenkinsModel {
        BoxJenkinsModel::new(b.to_vec(), a.to_vec(), c.to_vec(), d.to_vec(), 1, 400.0).unwrap()
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn identity_system_is_unit_delay() {
        let m = model(&[1.0], &[1.0], &[1.0], &[1.0]);
        let u = [3.0, -1.0, 2.0, 5.0];
        assert_eq!(m.simulate(&u).unwrap(), vec![0.0, 3.0, -1.0, 2.0]);
    }

    #[test]
    fn first_order_step_settles_at_five() {
        let m = model(&[0.5], &[1.0, -0.9], &[1.0], &[1.0]);
        let y = m.simulate(&vec![1.0; 400]).unwrap();
        assert!((y[399] - 5.0).abs() < 1e-12);
        assert!(m.simulate(&[0.0; 50]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unstable_and_noninvertible_rejected() {
        let m = model(&[1.0], &[1.0, -1.5], &[1.0], &[1.0]);
        assert!(matches!(m.simulate(&[1.0]), Err(Error::UnstableModel(_))));
        let m = model(&[1.0], &[1.0], &[1.0, 2.0], &[1.0]);
        assert!(matches!(m.predict_one_step(&[1.0], &[1.0]), Err(Error::NonInvertibleNoiseModel)));
        assert!(BoxJenkinsModel::new(vec![1.0], vec![2.0], vec![1.0], vec![1.0], 1, 1.0).is_err());
    }

    #[test]
    fn identity_noise_model_predicts_like_simulation() {
        let m = model(&[0.4, 0.2], &[1.0, -0.5, 0.1], &[1.0], &[1.0]);
        let u = noise(500, 1);
        let y = noise(500, 2);
        assert_eq!(m.predict_one_step(&u, &y).unwrap(), m.simulate(&u).unwrap());
    }

    #[test]
    fn true_model_leaves_zero_residuals_on_clean_data() {
        let m = model(&[0.4, 0.2], &[1.0, -0.5, 0.1], &[1.0, 0.3], &[1.0, -0.7]);
        let u = noise(1000, 3);
        let y = m.simulate(&u).unwrap();
        let e = m.residuals(&u, &y).unwrap();
        assert!(e.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_system_predictor_is_noise_filter() {
        // G = 0: y_hat = (1 - D/C) y, evaluated directly
        let m = model(&[0.0], &[1.0], &[1.0, 0.5], &[1.0, -0.8]);
        let u = noise(300, 4);
        let y = noise(300, 5);
        let yhat = m.predict_one_step(&u, &y).unwrap();
        let e = lfilter(&[1.0, -0.8], &[1.0, 0.5], &y);
        for t in 0..300 {
            assert!((yhat[t] - (y[t] - e[t])).abs() < 1e-12);
            assert!(m.simulate(&u).unwrap()[t] == 0.0);
        }
    }

    #[test]
    fn gains_of_simple_models() {
        let m = model(&[1.0], &[1.0], &[1.0], &[1.0]);
        for g in m.frequency_response(&linear_frequency_grid(400.0, 11)).unwrap() {
            assert!((g.gain_g - 1.0).abs() < 1e-15 && (g.gain_h - 1.0).abs() < 1e-15);
        }
        let m = model(&[0.5, 0.5], &[1.0], &[1.0], &[1.0]);
        let r = m.frequency_response(&[0.0, 200.0]).unwrap();
        assert!((r[0].gain_g - 1.0).abs() < 1e-15);
        assert!(r[1].gain_g < 1e-15);
        assert!(matches!(m.frequency_response(&[201.0]), Err(Error::FrequencyOutOfRange { .. })));
    }

    #[test]
    fn grid_shape() {
        let g = linear_frequency_grid(400.0, 5);
        assert_eq!(g, vec![0.0, 50.0, 100.0, 150.0, 200.0]);
    }

    proptest! {
        #[test]
        fn simulation_is_linear(alpha in -5.0f64..5.0, beta in -5.0f64..5.0, s1 in 0u64..1000, s2 in 0u64..1000) {
            let m = model(&[0.3, -0.1, 0.05], &[1.0, -1.2, 0.5], &[1.0], &[1.0]);
            let u1 = noise(200, s1);
            let u2 = noise(200, s2 + 5000);
            let mix: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| alpha * a + beta * b).collect();
            let y = m.simulate(&mix).unwrap();
            let y1 = m.simulate(&u1).unwrap();
            let y2 = m.simulate(&u2).unwrap();
            for t in 0..200 {
                prop_assert!((y[t] - alpha * y1[t] - beta * y2[t]).abs() < 1e-10);
            }
        }

        #[test]
        fn identity_noise_prediction_equals_simulation(s in 0u64..1000) {
            let m = model(&[0.2, 0.1], &[1.0, -0.3], &[1.0], &[1.0]);
            let u = noise(100, s);
            let y = noise(100, s + 1);
            prop_assert_eq!(m.predict_one_step(&u, &y).unwrap(), m.simulate(&u).unwrap());
        }
    }
}
