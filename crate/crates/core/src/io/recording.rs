use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result, ResultExt};
use crate::signal::{validate_series_at, Location, Sample, SensorMeta, TriaxialSeries, STANDARD_GRAVITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "g")]
    G,
    #[serde(rename = "m/s^2", alias = "m/s2", alias = "m/s²", alias = "mps2")]
    MetersPerSecondSquared,
}

impl Units {
    fn scale(self) -> f64 {
        match self {
            Units::G => STANDARD_GRAVITY,
            Units::MetersPerSecondSquared => 1.0,
        }
    }
}

/// Sidecar metadata stored as a flat TOML document next to the CSV payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub sensor_id: String,
    pub location: String,
    pub rate_hz: f64,
    pub range_g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    pub units: Units,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<String>,
    #[serde(default)]
    pub synthetic: bool,
}

const REQUIRED_KEYS: [&str; 5] = ["sensor_id", "location", "rate_hz", "range_g", "units"];

impl RecordingMeta {
    pub fn from_sensor(meta: &SensorMeta) -> Self {
        RecordingMeta {
            sensor_id: meta.sensor_id.clone(),
            location: meta.location.to_string(),
            rate_hz: meta.rate_hz,
            range_g: meta.range_g,
            bandwidth_hz: meta.bandwidth_hz,
            units: Units::MetersPerSecondSquared,
            subject: None,
            run: None,
            synthetic: false,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            line: line_of(text, e.span()),
            message: e.message().to_string(),
        })?;
        if let Some(missing) = REQUIRED_KEYS.iter().find(|k| !table.contains_key(**k)) {
            return Err(Error::MetadataMissing(missing.to_string()));
        }
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Parse {
            line: 0,
            message: e.message().to_string(),
        })
    }

    pub fn sensor_meta(&self) -> Result<SensorMeta> {
        let meta = SensorMeta {
            sensor_id: self.sensor_id.clone(),
            location: self.location.parse::<Location>()?,
            rate_hz: self.rate_hz,
            range_g: self.range_g,
            bandwidth_hz: self.bandwidth_hz,
        };
        meta.validate()?;
        Ok(meta)
    }
}

fn line_of(text: &str, span: Option<std::ops::Range<usize>>) -> usize {
    span.map(|s| text[..s.start.min(text.len())].lines().count().max(1)).unwrap_or(0)
}

/// `<dir>/<stem>.meta.toml` for `<dir>/<stem>.csv`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.meta.toml"))
}

fn parse_csv(text: &str, rate_hz: f64) -> Result<(Vec<Sample>, f64)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut samples = Vec::new();
    let mut columns = None;
    let mut t_first = None;
    let mut t_prev: Option<f64> = None;
    let period = 1.0 / rate_hz;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let values: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match values {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    message: format!("not a number: {e}"),
                })
            }
        };
        let n = *columns.get_or_insert(values.len());
        if n != 3 && n != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 or 4 columns, found {n}"),
            });
        }
        if values.len() != n {
            return Err(Error::Parse {
                line,
                message: format!("expected {n} columns, found {}", values.len()),
            });
        }
        if n == 4 {
            let t = values[0];
            if let Some(prev) = t_prev {
                if ((t - prev) - period).abs() > 1e-6 * period {
                    return Err(Error::NonUniformTime { line });
                }
            }
            t_first.get_or_insert(t);
            t_prev = Some(t);
        }
        let off = n - 3;
        samples.push([values[off], values[off + 1], values[off + 2]]);
    }
    Ok((samples, t_first.unwrap_or(0.0)))
}

/// Loads `<csv>` and its sidecar, converting to m/s².
pub fn load_recording_with_meta(csv_path: &Path) -> Result<(TriaxialSeries, RecordingMeta)> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let sidecar = sidecar_path(csv_path);
    let meta_text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let info = RecordingMeta::parse(&meta_text).context(|| sidecar.display().to_string())?;
    let meta = info.sensor_meta().context(|| sidecar.display().to_string())?;
    let (mut samples, t0) = parse_csv(&text, meta.rate_hz).context(|| csv_path.display().to_string())?;
    let scale = info.units.scale();
    if scale != 1.0 {
        samples.iter_mut().for_each(|s| s.iter_mut().for_each(|v| *v *= scale));
    }
    let series = validate_series_at(samples, meta, t0).context(|| csv_path.display().to_string())?;
    Ok((series, info))
}

pub fn load_recording(csv_path: &Path) -> Result<TriaxialSeries> {
    load_recording_with_meta(csv_path).map(|(s, _)| s)
}

/// Writes the samples (m/s², shortest exact decimal form) and the sidecar.
pub fn write_recording(csv_path: &Path, series: &TriaxialSeries, info: &RecordingMeta, with_time: bool) -> Result<()> {
    let mut out = String::with_capacity(series.len() * 64);
    out.push_str(if with_time { "t,ax,ay,az\n" } else { "ax,ay,az\n" });
    let rate = series.rate_hz();
    for (i, s) in series.samples().iter().enumerate() {
        if with_time {
            out.push_str(&format!("{},", series.t0 + i as f64 / rate));
        }
        out.push_str(&format!("{},{},{}\n", s[0], s[1], s[2]));
    }
    let mut info = info.clone();
    info.units = Units::MetersPerSecondSquared;
    let sidecar = toml::to_string(&info).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    write_atomic(csv_path, out.as_bytes())?;
    write_atomic(&sidecar_path(csv_path), sidecar.as_bytes())
}
