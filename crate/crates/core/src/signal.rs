//! Uniformly sampled triaxial recordings and the segmentation, decimation and
//! alignment utilities the rest of the pipeline builds on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::DigitalFilter;

/// Standard gravity, used for every g to m/s² conversion.
pub const STANDARD_GRAVITY: f64 = 9.80665;

pub type Sample = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Location {
    Tool,
    HandRT,
    HandLT,
    ForearmRT,
    ForearmLT,
    UpperArmRT,
    UpperArmLT,
    NearUpperArmRT,
}

impl Location {
    pub const ALL: [Location; 8] = [
        Location::Tool,
        Location::HandRT,
        Location::HandLT,
        Location::ForearmRT,
        Location::ForearmLT,
        Location::UpperArmRT,
        Location::UpperArmLT,
        Location::NearUpperArmRT,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Location::Tool => "Tool",
            Location::HandRT => "HandRT",
            Location::HandLT => "HandLT",
            Location::ForearmRT => "ForearmRT",
            Location::ForearmLT => "ForearmLT",
            Location::UpperArmRT => "UpperArmRT",
            Location::UpperArmLT => "UpperArmLT",
            Location::NearUpperArmRT => "NearUpperArmRT",
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Location {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Location::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownLocation(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorMeta {
    pub sensor_id: String,
    pub location: Location,
    pub rate_hz: f64,
    pub range_g: f64,
    /// Internal low-pass corner of the device, if it has one.
    pub bandwidth_hz: Option<f64>,
}

impl SensorMeta {
    pub fn new(sensor_id: impl Into<String>, location: Location, rate_hz: f64, range_g: f64) -> Self {
        SensorMeta {
            sensor_id: sensor_id.into(),
            location,
            rate_hz,
            range_g,
            bandwidth_hz: None,
        }
    }

    // The bandwidth may exceed Nyquist: some devices filter at 256 Hz but emit 200 Hz.
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate_hz {}", self.rate_hz)));
        }
        if !(self.range_g > 0.0) {
            return Err(Error::InvalidParameter(format!("range_g {}", self.range_g)));
        }
        if let Some(b) = self.bandwidth_hz {
            if !(b > 0.0) {
                return Err(Error::InvalidParameter(format!("bandwidth_hz {b}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriaxialSeries {
    pub meta: SensorMeta,
    pub t0: f64,
    samples: Vec<Sample>,
}

impl TriaxialSeries {
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rate_hz(&self) -> f64 {
        self.meta.rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.meta.rate_hz
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[axis]).collect()
    }

    pub fn axis_range(&self, axis: usize, start: usize, len: usize) -> Vec<f64> {
        self.samples[start..start + len].iter().map(|s| s[axis]).collect()
    }

    /// Replaces the samples; callers guarantee finiteness.
    pub(crate) fn with_samples(&self, samples: Vec<Sample>) -> TriaxialSeries {
        TriaxialSeries {
            meta: self.meta.clone(),
            t0: self.t0,
            samples,
        }
    }

    pub(crate) fn from_axes(meta: SensorMeta, t0: f64, axes: [Vec<f64>; 3]) -> TriaxialSeries {
        let samples = (0..axes[0].len())
            .map(|i| [axes[0][i], axes[1][i], axes[2][i]])
            .collect();
        TriaxialSeries { meta, t0, samples }
    }

    pub(crate) fn map_axes(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> TriaxialSeries {
        let axes = [f(&self.axis(0)), f(&self.axis(1)), f(&self.axis(2))];
        TriaxialSeries::from_axes(self.meta.clone(), self.t0, axes)
    }
}

/// Builds a series after checking metadata and that every component is finite.
pub fn validate_series(raw: Vec<Sample>, meta: SensorMeta) -> Result<TriaxialSeries> {
    validate_series_at(raw, meta, 0.0)
}

pub fn validate_series_at(raw: Vec<Sample>, meta: SensorMeta, t0: f64) -> Result<TriaxialSeries> {
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    meta.validate()?;
    if let Some(index) = raw.iter().position(|s| s.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFiniteSample { index });
    }
    Ok(TriaxialSeries {
        meta,
        t0,
        samples: raw,
    })
}

/// Analysis window over a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub sensor_id: String,
    pub start_index: usize,
    pub length: usize,
    pub duration_s: f64,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start_index..self.start_index + self.length
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrailingPolicy {
    /// Discard the incomplete tail window.
    #[default]
    Drop,
    /// Keep the incomplete tail as a shorter final segment.
    Keep,
    /// Like `Drop`, but fail if not even one full window fits.
    Strict,
}

pub fn segment(series: &TriaxialSeries, window_s: f64, policy: TrailingPolicy) -> Result<Vec<Segment>> {
    if !(window_s > 0.0 && window_s.is_finite()) {
        return Err(Error::InvalidParameter(format!("window_s {window_s}")));
    }
    let length = (window_s * series.rate_hz()).round() as usize;
    if length == 0 {
        return Err(Error::InvalidParameter(format!(
            "window of {window_s} s holds no samples at {} Hz",
            series.rate_hz()
        )));
    }
    let full = series.len() / length;
    let mut out: Vec<Segment> = (0..full)
        .map(|k| Segment {
            sensor_id: series.meta.sensor_id.clone(),
            start_index: k * length,
            length,
            duration_s: length as f64 / series.rate_hz(),
        })
        .collect();
    let rest = series.len() - full * length;
    match policy {
        TrailingPolicy::Keep if rest > 0 => out.push(Segment {
            sensor_id: series.meta.sensor_id.clone(),
            start_index: full * length,
            length: rest,
            duration_s: rest as f64 / series.rate_hz(),
        }),
        TrailingPolicy::Strict if out.is_empty() => {
            return Err(Error::WindowLongerThanSeries {
                window_s,
                series_s: series.duration_s(),
            })
        }
        _ => {}
    }
    Ok(out)
}

/// Corner of the anti-alias low-pass relative to the decimated rate.
pub const ANTIALIAS_FRACTION: f64 = 0.4;
const ANTIALIAS_ORDER: usize = 4;

/// The low-pass `decimate` applies before dropping samples.
pub fn antialias_filter(source_rate_hz: f64, factor: usize) -> Result<DigitalFilter> {
    let new_rate = source_rate_hz / factor as f64;
    DigitalFilter::butterworth_lowpass(ANTIALIAS_ORDER, ANTIALIAS_FRACTION * new_rate, source_rate_hz)
}

/// Keeps every `factor`-th sample, optionally low-passing first.
pub fn decimate(series: &TriaxialSeries, factor: usize, antialias: bool) -> Result<TriaxialSeries> {
    if factor == 0 {
        return Err(Error::InvalidFactor(factor));
    }
    if factor == 1 {
        return Ok(series.clone());
    }
    let filtered = if antialias {
        let lp = antialias_filter(series.rate_hz(), factor)?;
        series.map_axes(|x| lp.filter(x))
    } else {
        series.clone()
    };
    let n = series.len() / factor;
    let samples = (0..n).map(|k| filtered.samples[k * factor]).collect();
    let mut meta = series.meta.clone();
    meta.rate_hz = series.rate_hz() / factor as f64;
    Ok(TriaxialSeries {
        meta,
        t0: series.t0,
        samples,
    })
}

/// Cuts both series to the shorter length, dropping samples from the end.
pub fn truncate_to_common(
    a: &TriaxialSeries,
    b: &TriaxialSeries,
) -> Result<(TriaxialSeries, TriaxialSeries)> {
    if a.rate_hz() != b.rate_hz() {
        return Err(Error::RateMismatch {
            left: a.rate_hz(),
            right: b.rate_hz(),
        });
    }
    let n = a.len().min(b.len());
    Ok((
        a.with_samples(a.samples[..n].to_vec()),
        b.with_samples(b.samples[..n].to_vec()),
    ))
}
