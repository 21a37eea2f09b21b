//! Synthetic tool, arm and sensor signals with known ground truth.
//!
//! Everything is a pure function of the spec and a `u64` seed. Random draws
//! come from ChaCha8 seeded with `seed_from_u64(seed)`, with a separate
//! stream per component so adding a sensor never perturbs the others.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{Biquad, DigitalFilter};
use crate::signal::{decimate, validate_series, Location, SensorMeta, TriaxialSeries, STANDARD_GRAVITY};
use crate::sysid::BoxJenkinsModel;

/// Rate at which the ground-truth signals are generated. It equals the
/// fastest sensor rate, so the arm chain seen by those sensors is exactly a
/// rational transfer function with an integer delay.
pub const GROUND_TRUTH_RATE_HZ: f64 = 400.0;

/// Nominal range attached to ground-truth series, which are never clipped.
const TRUTH_RANGE_G: f64 = 1000.0;

const STREAM_TOOL_NOISE: u64 = 1;
const STREAM_TOOL_TIMING: u64 = 2;
const STREAM_LINK_BASE: u64 = 16;
const STREAM_SENSOR_BASE: u64 = 64;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(spec_err(format!("{name} must be a finite nonnegative number, got {v}")));
    }
    Ok(())
}

fn check_pos(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(spec_err(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolSignalSpec {
    /// Hammer blows per second.
    pub impact_rate_hz: f64,
    pub rotation_hz: f64,
    /// Peak of each impact burst, m/s².
    pub impact_amplitude: f64,
    /// Exponential decay constant of the burst envelope, s.
    pub impact_decay_s: f64,
    /// Ringing frequency inside each burst.
    pub impact_ring_hz: f64,
    /// Amplitudes of the rotation harmonics, m/s²; entry k sits at (k+1)·rotation_hz.
    pub harmonic_amplitudes: Vec<f64>,
    pub broadband_noise_rms: f64,
    /// Per-axis scale of the impact bursts.
    pub axis_gains: [f64; 3],
    /// Blow timing jitter as a fraction of the blow period.
    pub timing_jitter: f64,
    /// Idle time at the start, before the tool is switched on, s.
    pub lead_in_s: f64,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub seed: u64,
}

impl Default for ToolSignalSpec {
    fn default() -> Self {
        ToolSignalSpec {
            impact_rate_hz: 45.0,
            rotation_hz: 15.0,
            impact_amplitude: 40.0,
            impact_decay_s: 0.004,
            impact_ring_hz: 150.0,
            harmonic_amplitudes: vec![5.0, 2.5, 1.2],
            broadband_noise_rms: 6.0,
            axis_gains: [1.0, 0.6, 0.8],
            timing_jitter: 0.03,
            lead_in_s: 0.5,
            duration_s: 60.0,
            rate_hz: GROUND_TRUTH_RATE_HZ,
            seed: 0,
        }
    }
}

impl ToolSignalSpec {
    pub fn validate(&self) -> Result<()> {
        check_pos("rate_hz", self.rate_hz)?;
        check_pos("duration_s", self.duration_s)?;
        check_nonneg("lead_in_s", self.lead_in_s)?;
        if self.lead_in_s >= self.duration_s {
            return Err(spec_err(format!("lead_in_s {} leaves no active signal", self.lead_in_s)));
        }
        check_nonneg("rotation_hz", self.rotation_hz)?;
        check_nonneg("impact_amplitude", self.impact_amplitude)?;
        check_nonneg("broadband_noise_rms", self.broadband_noise_rms)?;
        for (k, a) in self.harmonic_amplitudes.iter().enumerate() {
            check_nonneg(&format!("harmonic_amplitudes[{k}]"), *a)?;
        }
        for g in self.axis_gains {
            check_nonneg("axis_gains", g)?;
        }
        if !(self.rate_hz > 2.0 * self.rotation_hz) {
            return Err(spec_err(format!(
                "rate {} Hz must exceed twice the rotation frequency {} Hz",
                self.rate_hz, self.rotation_hz
            )));
        }
        if self.impact_amplitude > 0.0 {
            check_pos("impact_rate_hz", self.impact_rate_hz)?;
            check_pos("impact_decay_s", self.impact_decay_s)?;
            check_nonneg("impact_ring_hz", self.impact_ring_hz)?;
            if self.impact_ring_hz >= self.rate_hz / 2.0 {
                return Err(spec_err(format!("impact_ring_hz {} at or above Nyquist", self.impact_ring_hz)));
            }
        }
        if !(0.0..0.5).contains(&self.timing_jitter) {
            return Err(spec_err(format!("timing_jitter {} outside [0, 0.5)", self.timing_jitter)));
        }
        Ok(())
    }
}

fn truth_meta(location: Location, rate_hz: f64) -> SensorMeta {
    SensorMeta::new(format!("truth-{location}"), location, rate_hz, TRUTH_RANGE_G)
}

/// Impacts, rotation harmonics and broadband noise at `spec.rate_hz`.
pub fn gen_tool_signal(spec: &ToolSignalSpec) -> Result<TriaxialSeries> {
    spec.validate()?;
    let rate = spec.rate_hz;
    let n = (spec.duration_s * rate).round() as usize;
    if n == 0 {
        return Err(spec_err("duration holds no samples"));
    }
    let mut axes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut timing = rng(spec.seed, STREAM_TOOL_TIMING);

    if spec.impact_amplitude > 0.0 {
        let period = 1.0 / spec.impact_rate_hz;
        let blows = (spec.duration_s / period).ceil() as usize;
        let burst_len = ((10.0 * spec.impact_decay_s) * rate).ceil() as usize;
        for k in 0..blows {
            let jitter: f64 = timing.random_range(-1.0..=1.0) * spec.timing_jitter * period;
            let onset = ((k as f64 * period + jitter) * rate).round().max(0.0) as usize;
            for i in onset..(onset + burst_len).min(n) {
                let tau = (i - onset) as f64 / rate;
                let v = spec.impact_amplitude * (-tau / spec.impact_decay_s).exp() * (2.0 * PI * spec.impact_ring_hz * tau + PI / 2.0).sin();
                for (axis, gain) in axes.iter_mut().zip(spec.axis_gains) {
                    axis[i] += gain * v;
                }
            }
        }
    }

    for (h, &amp) in spec.harmonic_amplitudes.iter().enumerate() {
        let f = (h + 1) as f64 * spec.rotation_hz;
        for axis in axes.iter_mut() {
            let phase: f64 = timing.random_range(0.0..2.0 * PI);
            if amp == 0.0 {
                continue;
            }
            for (i, v) in axis.iter_mut().enumerate() {
                *v += amp * (2.0 * PI * f * i as f64 / rate + phase).sin();
            }
        }
    }

    if spec.broadband_noise_rms > 0.0 {
        let mut noise = rng(spec.seed, STREAM_TOOL_NOISE);
        for i in 0..n {
            for axis in axes.iter_mut() {
                axis[i] += spec.broadband_noise_rms * normal(&mut noise);
            }
        }
    }

    let idle = ((spec.lead_in_s * rate).round() as usize).min(n);
    for axis in axes.iter_mut() {
        axis[..idle].fill(0.0);
    }

    let samples = (0..n).map(|i| [axes[0][i], axes[1][i], axes[2][i]]).collect();
    validate_series(samples, truth_meta(Location::Tool, rate))
}

/// Second-order shelving attenuator
/// `g (wd/wn)² (s² + 2 zn wn s + wn²) / (s² + 2 zd wd s + wd²)`:
/// gain `g` at DC, a resonance near `pole_hz`, and `g (wd/wn)²` well above `zero_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingStage {
    pub gain: f64,
    pub pole_hz: f64,
    pub pole_damping: f64,
    pub zero_hz: f64,
    pub zero_damping: f64,
}

impl DampingStage {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gain", self.gain),
            ("pole_hz", self.pole_hz),
            ("pole_damping", self.pole_damping),
            ("zero_hz", self.zero_hz),
            ("zero_damping", self.zero_damping),
        ] {
            check_pos(name, v)?;
        }
        if self.gain > 1.0 {
            return Err(spec_err(format!("stage DC gain {} exceeds 1", self.gain)));
        }
        Ok(())
    }

    fn analog(&self) -> ([f64; 3], [f64; 3]) {
        let wd = 2.0 * PI * self.pole_hz;
        let wn = 2.0 * PI * self.zero_hz;
        let k = self.gain * wd * wd / (wn * wn);
        (
            [k * wn * wn, k * 2.0 * self.zero_damping * wn, k],
            [wd * wd, 2.0 * self.pole_damping * wd, 1.0],
        )
    }

    pub fn analog_response(&self, freq_hz: f64) -> Complex64 {
        let (n, d) = self.analog();
        let s = Complex64::new(0.0, 2.0 * PI * freq_hz);
        (n[0] + s * (n[1] + s * n[2])) / (d[0] + s * (d[1] + s * d[2]))
    }

    /// Largest analog gain on a dense logarithmic grid.
    pub fn peak_gain(&self) -> f64 {
        (0..=4000)
            .map(|k| 10f64.powf(-2.0 + 7.0 * k as f64 / 4000.0))
            .map(|f| self.analog_response(f).norm())
            .fold(self.gain, f64::max)
    }

    pub fn is_attenuator(&self) -> bool {
        self.peak_gain() <= 1.0 + 1e-12
    }

    pub fn discretize(&self, rate_hz: f64) -> Result<DigitalFilter> {
        self.validate()?;
        if self.pole_hz >= rate_hz / 2.0 || self.zero_hz >= rate_hz / 2.0 {
            return Err(Error::UnstableStage(format!(
                "stage corners must lie below Nyquist ({} Hz)",
                rate_hz / 2.0
            )));
        }
        let (n, d) = self.analog();
        DigitalFilter::new(vec![Biquad::from_analog(n, d, self.pole_hz, rate_hz)], rate_hz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    Unity,
    Gain { gain: f64 },
    Damping(DampingStage),
    BoxJenkins { model: BoxJenkinsModel },
}

impl Stage {
    pub fn validate(&self) -> Result<()> {
        match self {
            Stage::Unity => Ok(()),
            Stage::Gain { gain } => check_nonneg("gain", *gain),
            Stage::Damping(d) => d.validate(),
            Stage::BoxJenkins { model } => {
                model.validate()?;
                if !model.a.is_stable() {
                    return Err(Error::UnstableStage("Box-Jenkins system denominator".into()));
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, x: &[f64], rate_hz: f64) -> Result<Vec<f64>> {
        match self {
            Stage::Unity => Ok(x.to_vec()),
            Stage::Gain { gain } => Ok(x.iter().map(|v| gain * v).collect()),
            Stage::Damping(d) => Ok(d.discretize(rate_hz)?.filter(x)),
            Stage::BoxJenkins { model } => {
                if model.rate_hz != rate_hz {
                    return Err(Error::RateMismatch {
                        left: model.rate_hz,
                        right: rate_hz,
                    });
                }
                if !model.a.is_stable() {
                    return Err(Error::UnstableStage("Box-Jenkins system denominator".into()));
                }
                model.simulate(x)
            }
        }
    }

    /// Discrete-time frequency response at `rate_hz`.
    pub fn response(&self, freq_hz: f64, rate_hz: f64) -> Result<Complex64> {
        match self {
            Stage::Unity => Ok(Complex64::new(1.0, 0.0)),
            Stage::Gain { gain } => Ok(Complex64::new(*gain, 0.0)),
            Stage::Damping(d) => Ok(d.discretize(rate_hz)?.response(freq_hz)),
            Stage::BoxJenkins { model } => {
                let zinv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / model.rate_hz);
                Ok(model.b.eval(zinv) / model.a.eval(zinv) * zinv.powi(model.input_delay as i32))
            }
        }
    }
}

/// One body segment: a linear stage, a transport delay, an optional soft
/// clipper, and additive colored noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkSpec {
    pub stage: Stage,
    pub delay_s: f64,
    pub noise_rms: f64,
    /// Corner of the second-order low-pass that colors the link noise.
    pub noise_corner_hz: f64,
    /// `s tanh(x / s)` after the linear stage; off when unset.
    pub saturation: Option<f64>,
}

impl Default for LinkSpec {
    fn default() -> Self {
        LinkSpec {
            stage: Stage::Unity,
            delay_s: 0.0,
            noise_rms: 0.0,
            noise_corner_hz: 20.0,
            saturation: None,
        }
    }
}

impl LinkSpec {
    pub fn validate(&self) -> Result<()> {
        self.stage.validate()?;
        check_nonneg("delay_s", self.delay_s)?;
        check_nonneg("noise_rms", self.noise_rms)?;
        check_pos("noise_corner_hz", self.noise_corner_hz)?;
        if let Some(s) = self.saturation {
            check_pos("saturation", s)?;
        }
        Ok(())
    }

    fn delay_samples(&self, rate_hz: f64) -> usize {
        (self.delay_s * rate_hz).round() as usize
    }

    /// Linear part of the link (stage and delay) at `rate_hz`.
    pub fn response(&self, freq_hz: f64, rate_hz: f64) -> Result<Complex64> {
        let d = self.delay_samples(rate_hz) as f64;
        Ok(self.stage.response(freq_hz, rate_hz)? * Complex64::from_polar(1.0, -2.0 * PI * freq_hz * d / rate_hz))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModelSpec {
    pub hand_to_forearm: LinkSpec,
    pub forearm_to_upper_arm: LinkSpec,
}

impl ArmModelSpec {
    fn default_with(scale: f64) -> Self {
        ArmModelSpec {
            hand_to_forearm: LinkSpec {
                stage: Stage::Damping(DampingStage {
                    gain: 0.8 * scale,
                    pole_hz: 30.0,
                    pole_damping: 0.5,
                    zero_hz: 50.0,
                    zero_damping: 0.5,
                }),
                delay_s: 0.0025,
                noise_rms: 0.4,
                noise_corner_hz: 20.0,
                saturation: None,
            },
            forearm_to_upper_arm: LinkSpec {
                stage: Stage::Damping(DampingStage {
                    gain: 0.75 * scale,
                    pole_hz: 45.0,
                    pole_damping: 0.6,
                    zero_hz: 70.0,
                    zero_damping: 0.5,
                }),
                delay_s: 0.0025,
                noise_rms: 0.8,
                noise_corner_hz: 15.0,
                saturation: None,
            },
        }
    }

    pub fn right_default() -> Self {
        Self::default_with(1.0)
    }

    pub fn left_default() -> Self {
        Self::default_with(0.9)
    }

    pub fn validate(&self) -> Result<()> {
        self.hand_to_forearm.validate()?;
        self.forearm_to_upper_arm.validate()
    }

    /// |G| of the noise-free hand to upper-arm chain at `rate_hz`.
    pub fn chain_gain(&self, freq_hz: f64, rate_hz: f64) -> Result<f64> {
        Ok((self.hand_to_forearm.response(freq_hz, rate_hz)? * self.forearm_to_upper_arm.response(freq_hz, rate_hz)?).norm())
    }
}

fn colored_noise(n: usize, rms: f64, corner_hz: f64, rate_hz: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let white: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let shaped = if corner_hz < 0.45 * rate_hz {
        DigitalFilter::butterworth_lowpass(2, corner_hz, rate_hz)?.filter(&white)
    } else {
        white
    };
    let actual = (shaped.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if actual == 0.0 {
        return Ok(shaped);
    }
    Ok(shaped.iter().map(|v| v * rms / actual).collect())
}

/// Passes `input` through `link` and labels the result with `to`. The link
/// noise is drawn from a stream keyed by `to`.
pub fn propagate(link: &LinkSpec, input: &TriaxialSeries, to: Location, seed: u64) -> Result<TriaxialSeries> {
    link.validate()?;
    let rate = input.rate_hz();
    let n = input.len();
    let delay = link.delay_samples(rate);
    let mut noise_rng = rng(seed, STREAM_LINK_BASE + to as u64);
    let mut axes: [Vec<f64>; 3] = Default::default();
    for (a, out) in axes.iter_mut().enumerate() {
        let x = input.axis(a);
        let mut y = link.stage.apply(&x, rate)?;
        if delay > 0 {
            y.truncate(n.saturating_sub(delay));
            y.splice(0..0, std::iter::repeat_n(0.0, delay.min(n)));
        }
        if let Some(s) = link.saturation {
            y.iter_mut().for_each(|v| *v = s * (*v / s).tanh());
        }
        if link.noise_rms > 0.0 {
            let noise = colored_noise(n, link.noise_rms, link.noise_corner_hz, rate, &mut noise_rng)?;
            y.iter_mut().zip(&noise).for_each(|(v, e)| *v += e);
        }
        *out = y;
    }
    let samples = (0..n).map(|i| [axes[0][i], axes[1][i], axes[2][i]]).collect();
    validate_series(samples, truth_meta(to, rate)).map_err(|e| match e {
        Error::NonFiniteSample { .. } => Error::UnstableStage(format!("link into {to} diverged")),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModelSpec {
    pub meta: SensorMeta,
    pub noise_rms: f64,
    pub quantization_step: f64,
    /// Gravity in sensor axes; zero or of standard magnitude.
    pub gravity: [f64; 3],
    /// Low-pass before decimation; some devices simply drop samples.
    pub antialias: bool,
}

impl Default for SensorModelSpec {
    fn default() -> Self {
        SensorModelSpec {
            meta: SensorMeta::new("sensor", Location::HandRT, 400.0, 16.0),
            noise_rms: 0.0,
            quantization_step: 0.0,
            gravity: [0.0, 0.0, STANDARD_GRAVITY],
            antialias: true,
        }
    }
}

/// Step of a signed 16-bit converter spanning `±range_g`.
pub fn lsb_16bit(range_g: f64) -> f64 {
    2.0 * range_g * STANDARD_GRAVITY / 65_536.0
}

impl SensorModelSpec {
    pub fn new(meta: SensorMeta) -> Self {
        SensorModelSpec {
            meta,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.meta.validate()?;
        check_nonneg("noise_rms", self.noise_rms)?;
        check_nonneg("quantization_step", self.quantization_step)?;
        let g = self.gravity.iter().map(|v| v * v).sum::<f64>().sqrt();
        if g != 0.0 && (g / STANDARD_GRAVITY - 1.0).abs() > 0.01 {
            return Err(spec_err(format!("|gravity| = {g} is not within 1% of standard gravity")));
        }
        Ok(())
    }

    fn defaults_for(location: Location) -> Self {
        let (id, rate, range, bandwidth, antialias) = match location {
            Location::Tool => ("HWT906", 400.0, 16.0, None, true),
            Location::NearUpperArmRT => ("WT9011", 200.0, 16.0, Some(256.0), false),
            _ => ("NUM870", 400.0, 200.0, None, true),
        };
        let mut meta = SensorMeta::new(format!("{id}-{location}"), location, rate, range);
        meta.bandwidth_hz = bandwidth;
        let tilt = match location {
            Location::Tool => [0.0, 0.0, STANDARD_GRAVITY],
            Location::HandRT | Location::HandLT => [0.0, STANDARD_GRAVITY, 0.0],
            _ => [STANDARD_GRAVITY, 0.0, 0.0],
        };
        SensorModelSpec {
            meta,
            noise_rms: 0.02,
            quantization_step: lsb_16bit(range),
            gravity: tilt,
            antialias,
        }
    }
}

/// Gravity, device bandwidth, sampling, noise, quantization and clipping.
pub fn sensor_observe(spec: &SensorModelSpec, truth: &TriaxialSeries, seed: u64, stream: u64) -> Result<TriaxialSeries> {
    spec.validate()?;
    let source = truth.rate_hz();
    let target = spec.meta.rate_hz;
    if target > source {
        return Err(Error::RateTooHigh {
            sensor_hz: target,
            source_hz: source,
        });
    }
    let ratio = source / target;
    let factor = ratio.round() as usize;
    if (ratio - factor as f64).abs() > 1e-9 * ratio {
        return Err(spec_err(format!("sensor rate {target} Hz does not divide the source rate {source} Hz")));
    }

    let mut series = truth.clone();
    if let Some(b) = spec.meta.bandwidth_hz {
        if b < 0.45 * source {
            let lp = DigitalFilter::butterworth_lowpass(2, b, source)?;
            series = series.map_axes(|x| lp.filter(x));
        }
    }
    series = decimate(&series, factor, spec.antialias)?;

    let clip = spec.meta.range_g * STANDARD_GRAVITY;
    let mut noise = rng(seed, STREAM_SENSOR_BASE + stream);
    let samples = series
        .samples()
        .iter()
        .map(|s| {
            let mut out = *s;
            for (a, v) in out.iter_mut().enumerate() {
                if spec.gravity[a] != 0.0 {
                    *v += spec.gravity[a];
                }
                if spec.noise_rms > 0.0 {
                    *v += spec.noise_rms * normal(&mut noise);
                }
                if spec.quantization_step > 0.0 {
                    *v = spec.quantization_step * (*v / spec.quantization_step).round();
                }
                *v = v.clamp(-clip, clip);
            }
            out
        })
        .collect();
    validate_series(samples, spec.meta.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub tool: ToolSignalSpec,
    pub right_arm: ArmModelSpec,
    pub left_arm: ArmModelSpec,
    pub sensors: Vec<SensorModelSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            tool: ToolSignalSpec::default(),
            right_arm: ArmModelSpec::right_default(),
            left_arm: ArmModelSpec::left_default(),
            sensors: Location::ALL.into_iter().map(SensorModelSpec::defaults_for).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.tool.validate()?;
        self.right_arm.validate()?;
        self.left_arm.validate()?;
        for s in &self.sensors {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBundle {
    pub seed: u64,
    pub config: ExperimentConfig,
    /// Noise-free and noisy true signals at every body location, ground-truth rate.
    pub truth: Vec<TriaxialSeries>,
    pub observed: Vec<TriaxialSeries>,
}

impl ExperimentBundle {
    /// True signal a sensor at `location` sees.
    pub fn truth(&self, location: Location) -> Option<&TriaxialSeries> {
        let source = match location {
            Location::NearUpperArmRT => Location::UpperArmRT,
            other => other,
        };
        self.truth.iter().find(|s| s.meta.location == source)
    }

    pub fn observed(&self, location: Location) -> Option<&TriaxialSeries> {
        self.observed.iter().find(|s| s.meta.location == location)
    }
}

/// Tool signal, both arm chains, and every configured sensor.
pub fn make_experiment(config: &ExperimentConfig, seed: u64) -> Result<ExperimentBundle> {
    config.validate()?;
    let mut tool_spec = config.tool.clone();
    tool_spec.seed = seed;
    let tool = gen_tool_signal(&tool_spec)?;
    let relabel = |s: &TriaxialSeries, loc: Location| {
        let mut out = s.clone();
        out.meta = truth_meta(loc, s.rate_hz());
        out
    };
    // Both hands grip the tool directly.
    let hand_rt = relabel(&tool, Location::HandRT);
    let hand_lt = relabel(&tool, Location::HandLT);
    let forearm_rt = propagate(&config.right_arm.hand_to_forearm, &hand_rt, Location::ForearmRT, seed)?;
    let upper_rt = propagate(&config.right_arm.forearm_to_upper_arm, &forearm_rt, Location::UpperArmRT, seed)?;
    let forearm_lt = propagate(&config.left_arm.hand_to_forearm, &hand_lt, Location::ForearmLT, seed)?;
    let upper_lt = propagate(&config.left_arm.forearm_to_upper_arm, &forearm_lt, Location::UpperArmLT, seed)?;
    let mut bundle = ExperimentBundle {
        seed,
        config: config.clone(),
        truth: vec![tool, hand_rt, hand_lt, forearm_rt, forearm_lt, upper_rt, upper_lt],
        observed: Vec::new(),
    };
    for (k, sensor) in config.sensors.iter().enumerate() {
        let truth = bundle
            .truth(sensor.meta.location)
            .ok_or_else(|| spec_err(format!("no ground truth for {}", sensor.meta.location)))?;
        let obs = sensor_observe(sensor, truth, seed, k as u64)
            .map_err(|e| Error::Context {
                context: format!("sensor {}", sensor.meta.sensor_id),
                source: Box::new(e),
            })?;
        bundle.observed.push(obs);
    }
    Ok(bundle)
}
