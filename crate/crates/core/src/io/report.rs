use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::exposure::{Assessment, ExposureReport};
use crate::signal::Location;
use crate::stats::{RegressionResult, TTestResult};
use crate::sysid::{FitReport, GainPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateExposure {
    /// Energy average of the per-segment vibration total values.
    pub ahv: f64,
    pub a8: f64,
    pub assessment: Assessment,
    pub segments: usize,
    pub analyzed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorExposure {
    pub sensor_id: String,
    pub location: Location,
    pub rate_hz: f64,
    pub samples: usize,
    pub segments: Vec<ExposureReport>,
    pub aggregate: Option<AggregateExposure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub input_sensor: String,
    pub output_sensor: String,
    pub input_axis: usize,
    pub output_axis: usize,
    pub segment: Option<usize>,
    pub samples: usize,
    pub fit: Option<FitReport>,
    pub error: Option<String>,
    /// Name of the model file written alongside the report, if any.
    pub model_file: Option<String>,
    pub frequency_response: Vec<GainPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub first: Location,
    pub second: Location,
    pub result: Option<TTestResult>,
    pub significant: bool,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRegression {
    pub predictor: Location,
    pub response: Location,
    pub result: Option<RegressionResult>,
    pub significant: bool,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticsSection {
    pub metric: String,
    pub significance: f64,
    pub t_tests: Vec<PairTest>,
    pub regressions: Vec<PairRegression>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub config: AnalysisConfig,
    pub exposures: Vec<SensorExposure>,
    pub identifications: Vec<IdentificationResult>,
    pub statistics: Option<StatisticsSection>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, config: &AnalysisConfig) -> Self {
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            exposures: Vec::new(),
            identifications: Vec::new(),
            statistics: None,
            warnings: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Worst assessment over every segment of every sensor.
    pub fn worst_assessment(&self) -> Option<Assessment> {
        self.exposures.iter().flat_map(|e| e.segments.iter().map(|s| s.assessment)).max()
    }

    pub fn unconverged_fits(&self) -> usize {
        self.identifications
            .iter()
            .filter(|i| i.fit.as_ref().is_some_and(|f| !f.converged))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" | "txt" => Ok(ReportFormat::Text),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Shortest decimal of `v` rounded to 15 significant digits.
fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return "0.0".into();
    }
    let rounded: f64 = format!("{v:.14e}").parse().unwrap_or(v);
    let a = rounded.abs();
    if (1e-5..1e15).contains(&a) {
        let s = format!("{rounded}");
        if s.contains('.') {
            s
        } else {
            s + ".0"
        }
    } else {
        format!("{rounded:e}")
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap_or_default()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).unwrap_or_default());
                out.push_str(": ");
                write_value(out, &map[*k], indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Key-sorted JSON with floats at 15 significant digits.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn p_text(p: f64) -> String {
    if p < 1e-4 {
        "<0.0001".into()
    } else {
        format!("{p:.4}")
    }
}

fn assessment_text(a: Assessment) -> &'static str {
    match a {
        Assessment::BelowAction => "below action value",
        Assessment::AboveAction => "above action value",
        Assessment::AboveLimit => "above limit value",
    }
}

pub(crate) fn render_text(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "hav {} report ({})", r.version, r.command);
    for e in &r.exposures {
        let _ = writeln!(s, "\n== {} ({}, {} Hz, {} samples)", e.sensor_id, e.location, e.rate_hz, e.samples);
        let _ = writeln!(s, "{:>4} {:>9} {:>9} {:>9} {:>9} {:>9}  assessment", "seg", "start_s", "ahw_x", "ahw_y", "ahw_z", "ahv");
        for seg in &e.segments {
            let w = seg.weighted.unwrap_or(seg.unweighted);
            let _ = writeln!(
                s,
                "{:>4} {:>9.2} {:>9.4} {:>9.4} {:>9.4} {:>9.4}  {}",
                seg.segment,
                seg.start_index as f64 / e.rate_hz,
                w.x,
                w.y,
                w.z,
                seg.ahv,
                assessment_text(seg.assessment)
            );
        }
        if let Some(a) = &e.aggregate {
            let _ = writeln!(s, "overall: ahv {:.4} m/s², A(8) {:.4} m/s², {}", a.ahv, a.a8, assessment_text(a.assessment));
        }
    }
    if !r.identifications.is_empty() {
        let _ = writeln!(s, "\n== transfer functions");
        for id in &r.identifications {
            let seg = id.segment.map(|k| format!(" segment {k}")).unwrap_or_default();
            let _ = write!(
                s,
                "{}[{}] -> {}[{}]{}: ",
                id.input_sensor, id.input_axis, id.output_sensor, id.output_axis, seg
            );
            match (&id.fit, &id.error) {
                (Some(f), _) => {
                    let _ = writeln!(
                        s,
                        "fit {:.2}%, RMSE simulated {:.4}, predicted {:.4}, RMS discrepancy {:.2}%, {} iterations{}",
                        f.nrmse_fit_percent,
                        f.rmse_simulated,
                        f.rmse_predicted,
                        f.rms_discrepancy_percent,
                        f.iterations,
                        if f.converged { "" } else { " (not converged)" }
                    );
                }
                (None, Some(e)) => {
                    let _ = writeln!(s, "failed: {e}");
                }
                (None, None) => {
                    let _ = writeln!(s, "no result");
                }
            }
        }
    }
    if let Some(st) = &r.statistics {
        let _ = writeln!(s, "\n== statistics on segment {} (significance p < {})", st.metric, st.significance);
        for t in &st.t_tests {
            match &t.result {
                Some(res) => {
                    let _ = writeln!(
                        s,
                        "{} vs {}: t({}) = {:.3}, p = {}{}",
                        t.first,
                        t.second,
                        res.df,
                        res.t,
                        p_text(res.p_two_sided),
                        if t.significant { " *" } else { "" }
                    );
                }
                None => {
                    let _ = writeln!(s, "{} vs {}: {}", t.first, t.second, t.warning.as_deref().unwrap_or("no result"));
                }
            }
        }
        if !st.regressions.is_empty() {
            let cols: Vec<String> = st.regressions.iter().map(|g| format!("{} → {}", g.predictor, g.response)).collect();
            let width = cols.iter().map(|c| c.chars().count()).max().unwrap_or(8).max(10);
            let mut row = |label: &str, cells: Vec<String>| {
                let _ = write!(s, "{label:<14}");
                for c in cells {
                    let _ = write!(s, "  {c:>width$}");
                }
                s.push('\n');
            };
            row("", cols.clone());
            let cell = |g: &PairRegression, f: &dyn Fn(&RegressionResult) -> String| {
                g.result.as_ref().map(f).unwrap_or_else(|| "n/a".into())
            };
            row("Adjusted R²", st.regressions.iter().map(|g| cell(g, &|r| format!("{:.4}", r.adj_r2))).collect());
            let df2 = st.regressions.iter().find_map(|g| g.result.as_ref().map(|r| r.df.1));
            let f_label = df2.map(|d| format!("F(1,{d})")).unwrap_or_else(|| "F(1,n-2)".into());
            row(&f_label, st.regressions.iter().map(|g| cell(g, &|r| format!("{:.3}", r.f_stat))).collect());
            row(
                "p-value",
                st.regressions
                    .iter()
                    .map(|g| {
                        let mark = if g.significant { "*" } else { "" };
                        cell(g, &|r| p_text(r.p)) + mark
                    })
                    .collect(),
            );
            for g in st.regressions.iter().filter(|g| g.result.is_none()) {
                let _ = writeln!(s, "{} → {}: {}", g.predictor, g.response, g.warning.as_deref().unwrap_or("no result"));
            }
        }
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(s, "\n== warnings");
        for w in &r.warnings {
            let _ = writeln!(s, "- {w}");
        }
    }
    s
}
