use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AnalysisConfig, GravityScope};
use super::recording::{sidecar_path, write_recording, RecordingMeta};
use super::report::{
    render_text, to_canonical_json, AggregateExposure, IdentificationResult, PairRegression, PairTest, ReportFormat,
    RunReport, SensorExposure, StatisticsSection,
};
use super::write_atomic;
use crate::error::{Error, Result, ResultExt};
use crate::exposure::{assess_limits, daily_exposure, AxisRms, ExposureReport};
use crate::gravity::remove_gravity;
use crate::signal::{decimate, segment, truncate_to_common, Location, Segment, TriaxialSeries};
use crate::stats::{linear_regression, paired_t_test};
use crate::synth::{make_experiment, ArmModelSpec, ExperimentConfig, ToolSignalSpec};
use crate::sysid::{fit_bj, linear_frequency_grid, BoxJenkinsModel, Orders, PredictionTrace};
use crate::weighting::{apply_filter, design_weighting_filter};

const AXES: [&str; 3] = ["x", "y", "z"];

fn slice(series: &TriaxialSeries, seg: &Segment) -> TriaxialSeries {
    series.with_samples(series.samples()[seg.range()].to_vec())
}

fn rms3(s: &TriaxialSeries) -> Result<AxisRms> {
    AxisRms::from_axes(&s.axis(0), &s.axis(1), &s.axis(2))
}

fn analyze_one(series: &TriaxialSeries, config: &AnalysisConfig) -> Result<(SensorExposure, Vec<String>)> {
    let id = &series.meta.sensor_id;
    let mut warnings = Vec::new();
    let segments = segment(series, config.window_s, config.trailing)?;
    if segments.is_empty() {
        warnings.push(format!(
            "{id}: recording of {} s is shorter than one {} s window",
            series.duration_s(),
            config.window_s
        ));
    }
    let filter = if config.weighting.enabled {
        let f = design_weighting_filter(&config.weighting, series.rate_hz())?;
        warnings.extend(f.warnings.iter().map(|w| format!("{id}: {w}")));
        Some(f)
    } else {
        None
    };
    let whole = match config.gravity_scope {
        GravityScope::Run => Some(remove_gravity(series, &config.gravity)?),
        GravityScope::Segment => None,
    };
    let whole_weighted = match (&whole, &filter) {
        (Some(w), Some(f)) => Some(apply_filter(f, w)?),
        _ => None,
    };

    let reports: Vec<ExposureReport> = segments
        .par_iter()
        .enumerate()
        .map(|(k, seg)| -> Result<ExposureReport> {
            let (dynamic, weighted) = match (&whole, &whole_weighted) {
                (Some(w), ww) => (slice(w, seg), ww.as_ref().map(|x| slice(x, seg))),
                (None, _) => {
                    let d = remove_gravity(&slice(series, seg), &config.gravity)?;
                    let w = filter.as_ref().map(|f| apply_filter(f, &d)).transpose()?;
                    (d, w)
                }
            };
            let weighted = weighted.as_ref().map(rms3).transpose()?;
            ExposureReport::build(
                k,
                seg.start_index,
                seg.duration_s,
                rms3(&dynamic)?,
                weighted,
                config.exposure_s,
                config.thresholds,
            )
        })
        .enumerate()
        .map(|(k, r)| r.context(|| format!("{id} segment {k}")))
        .collect::<Result<_>>()?;

    let aggregate = if reports.is_empty() {
        None
    } else {
        let total: f64 = reports.iter().map(|r| r.duration_s).sum();
        let energy: f64 = reports.iter().map(|r| r.ahv * r.ahv * r.duration_s).sum();
        let ahv = (energy / total).sqrt();
        let a8 = daily_exposure(ahv, config.exposure_s, crate::exposure::EIGHT_HOURS_S)?;
        Some(AggregateExposure {
            ahv,
            a8,
            assessment: assess_limits(a8, &config.thresholds)?,
            segments: reports.len(),
            analyzed_s: total,
        })
    };
    Ok((
        SensorExposure {
            sensor_id: id.clone(),
            location: series.meta.location,
            rate_hz: series.rate_hz(),
            samples: series.len(),
            segments: reports,
            aggregate,
        },
        warnings,
    ))
}

/// Gravity removal, optional weighting, segmentation and exposure per recording.
pub fn cmd_analyze(recordings: &[TriaxialSeries], config: &AnalysisConfig) -> Result<RunReport> {
    config.validate()?;
    if recordings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let results: Vec<(SensorExposure, Vec<String>)> = recordings
        .par_iter()
        .map(|s| analyze_one(s, config).context(|| format!("analyzing {}", s.meta.sensor_id)))
        .collect::<Result<_>>()?;
    let mut report = RunReport::new("analyze", config);
    for (exposure, warnings) in results {
        report.exposures.push(exposure);
        report.warnings.extend(warnings);
    }
    Ok(report)
}

/// One fitted input/output channel with the data needed for plot tables.
#[derive(Debug, Clone)]
pub struct FittedChannel {
    pub result_index: usize,
    pub model: BoxJenkinsModel,
    pub trace: PredictionTrace,
}

#[derive(Debug, Clone)]
pub struct IdentifyOutcome {
    pub report: RunReport,
    pub channels: Vec<FittedChannel>,
}

fn match_rates(input: &TriaxialSeries, output: &TriaxialSeries, allow: bool) -> Result<(TriaxialSeries, TriaxialSeries)> {
    let (ri, ro) = (input.rate_hz(), output.rate_hz());
    if ri == ro {
        return Ok((input.clone(), output.clone()));
    }
    let mismatch = Error::RateMismatch { left: ri, right: ro };
    if !allow {
        return Err(mismatch);
    }
    let (hi, lo) = if ri > ro { (ri, ro) } else { (ro, ri) };
    let ratio = hi / lo;
    let factor = ratio.round() as usize;
    if (ratio - factor as f64).abs() > 1e-9 * ratio {
        return Err(mismatch);
    }
    if ri > ro {
        Ok((decimate(input, factor, true)?, output.clone()))
    } else {
        Ok((input.clone(), decimate(output, factor, true)?))
    }
}

fn model_file_name(in_axis: usize, out_axis: usize, segment: Option<usize>) -> String {
    match segment {
        Some(k) => format!("model_{}{}_seg{k}.json", AXES[in_axis], AXES[out_axis]),
        None => format!("model_{}{}.json", AXES[in_axis], AXES[out_axis]),
    }
}

type ChannelFit = (IdentificationResult, Option<(BoxJenkinsModel, PredictionTrace)>, Option<Error>);

/// Box-Jenkins fits from `input` to `output`, per configured axis pair.
pub fn cmd_identify(input: &TriaxialSeries, output: &TriaxialSeries, config: &AnalysisConfig) -> Result<IdentifyOutcome> {
    config.validate()?;
    let sc = &config.sysid;
    let (u_all, y_all) = match_rates(input, output, sc.decimate_to_match)?;
    let (mut u_all, mut y_all) = truncate_to_common(&u_all, &y_all)?;
    let mut report = RunReport::new("identify", config);
    if sc.remove_gravity {
        u_all = remove_gravity(&u_all, &config.gravity)?;
        y_all = remove_gravity(&y_all, &config.gravity)?;
    }
    if sc.weighted {
        let f = design_weighting_filter(&config.weighting, u_all.rate_hz())?;
        report.warnings.extend(f.warnings.iter().map(|w| w.to_string()));
        u_all = apply_filter(&f, &u_all)?;
        y_all = apply_filter(&f, &y_all)?;
    }
    let rate = u_all.rate_hz();
    let windows: Vec<(Option<usize>, std::ops::Range<usize>)> = if sc.per_segment {
        segment(&u_all, config.window_s, config.trailing)?
            .iter()
            .enumerate()
            .map(|(k, s)| (Some(k), s.range()))
            .collect()
    } else {
        vec![(None, 0..u_all.len())]
    };
    let tasks: Vec<(Option<usize>, std::ops::Range<usize>, [usize; 2])> = windows
        .iter()
        .flat_map(|(k, r)| sc.pairing.iter().map(move |p| (*k, r.clone(), *p)))
        .collect();
    let grid = linear_frequency_grid(rate, sc.frequency_points);

    let fits: Vec<ChannelFit> = tasks
        .par_iter()
        .map(|(seg, range, [ia, oa])| {
            let u = u_all.axis_range(*ia, range.start, range.len());
            let y = y_all.axis_range(*oa, range.start, range.len());
            let mut result = IdentificationResult {
                input_sensor: input.meta.sensor_id.clone(),
                output_sensor: output.meta.sensor_id.clone(),
                input_axis: *ia,
                output_axis: *oa,
                segment: *seg,
                samples: u.len(),
                fit: None,
                error: None,
                model_file: None,
                frequency_response: Vec::new(),
            };
            let fitted = fit_bj(&u, &y, rate, Orders::uniform(sc.order), &sc.options).and_then(|(model, fit)| {
                let response = model.frequency_response(&grid)?;
                let trace = model.prediction_trace(&u, &y)?;
                Ok((model, fit, response, trace))
            });
            match fitted {
                Ok((model, fit, response, trace)) => {
                    result.fit = Some(fit);
                    result.frequency_response = response;
                    result.model_file = Some(model_file_name(*ia, *oa, *seg));
                    (result, Some((model, trace)), None)
                }
                Err(e) => {
                    result.error = Some(e.to_string());
                    (result, None, Some(e))
                }
            }
        })
        .collect();

    let mut channels = Vec::new();
    let mut first_error = None;
    for (i, (result, fitted, err)) in fits.into_iter().enumerate() {
        let label = format!(
            "{}[{}] -> {}[{}]{}",
            result.input_sensor,
            AXES[result.input_axis],
            result.output_sensor,
            AXES[result.output_axis],
            result.segment.map(|k| format!(" segment {k}")).unwrap_or_default()
        );
        if let Some(f) = &result.fit {
            if !f.converged {
                report.warnings.push(format!("{label}: not converged after {} iterations", f.iterations));
            }
        }
        if let Some(e) = err {
            report.warnings.push(format!("{label}: {e}"));
            first_error.get_or_insert((label, e));
        }
        if let Some((model, trace)) = fitted {
            channels.push(FittedChannel {
                result_index: i,
                model,
                trace,
            });
        }
        report.identifications.push(result);
    }
    if channels.is_empty() {
        if let Some((label, e)) = first_error {
            return Err(Error::Context {
                context: label,
                source: Box::new(e),
            });
        }
    }
    Ok(IdentifyOutcome { report, channels })
}

fn segment_metric(report: &RunReport, location: Location) -> Option<Vec<f64>> {
    report
        .exposures
        .iter()
        .find(|e| e.location == location)
        .map(|e| e.segments.iter().map(|s| s.ahv).collect())
}

/// Both columns and an optional note, or the reason they cannot be paired.
type Paired = std::result::Result<(Vec<f64>, Vec<f64>, Option<String>), String>;

fn paired_columns(report: &RunReport, a: Location, b: Location) -> Paired {
    let xa = segment_metric(report, a).ok_or_else(|| format!("no recording at {a}"))?;
    let xb = segment_metric(report, b).ok_or_else(|| format!("no recording at {b}"))?;
    let n = xa.len().min(xb.len());
    let note = (xa.len() != xb.len()).then(|| format!("segment counts differ ({} vs {}); using the first {n}", xa.len(), xb.len()));
    Ok((xa[..n].to_vec(), xb[..n].to_vec(), note))
}

/// Paired t-tests and regressions on per-segment vibration total values.
pub fn cmd_stats(report: &RunReport, config: &AnalysisConfig) -> Result<StatisticsSection> {
    config.validate()?;
    let alpha = config.stats.significance;
    let t_tests = config
        .stats
        .paired
        .iter()
        .map(|[a, b]| {
            let mut t = PairTest {
                first: *a,
                second: *b,
                result: None,
                significant: false,
                warning: None,
            };
            match paired_columns(report, *a, *b) {
                Ok((xa, xb, note)) => {
                    t.warning = note;
                    match paired_t_test(&xa, &xb) {
                        Ok(r) => {
                            t.significant = r.is_significant(alpha);
                            t.result = Some(r);
                        }
                        Err(e) => t.warning = Some(e.to_string()),
                    }
                }
                Err(w) => t.warning = Some(w),
            }
            t
        })
        .collect();
    let regressions = config
        .stats
        .regressions
        .iter()
        .map(|[x, y]| {
            let mut g = PairRegression {
                predictor: *x,
                response: *y,
                result: None,
                significant: false,
                warning: None,
            };
            match paired_columns(report, *x, *y) {
                Ok((xs, ys, note)) => {
                    g.warning = note;
                    match linear_regression(&xs, &ys) {
                        Ok(r) => {
                            g.significant = r.is_significant(alpha);
                            g.result = Some(r);
                        }
                        Err(e) => g.warning = Some(e.to_string()),
                    }
                }
                Err(w) => g.warning = Some(w),
            }
            g
        })
        .collect();
    Ok(StatisticsSection {
        metric: "ahv".into(),
        significance: alpha,
        t_tests,
        regressions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedFile {
    pub location: Location,
    pub sensor_id: String,
    pub csv: String,
    pub sidecar: String,
    pub rate_hz: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSummary {
    pub location: Location,
    pub rate_hz: f64,
    pub rms: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationManifest {
    pub version: String,
    pub seed: u64,
    pub synthetic: bool,
    pub files: Vec<SimulatedFile>,
    pub tool: ToolSignalSpec,
    pub right_arm: ArmModelSpec,
    pub left_arm: ArmModelSpec,
    pub truth: Vec<TruthSummary>,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes every observed sensor as a recording plus `manifest.json`.
pub fn cmd_simulate(config: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<SimulationManifest> {
    let bundle = make_experiment(config, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    for series in &bundle.observed {
        let csv: PathBuf = out_dir.join(format!("{}.csv", series.meta.location));
        let mut info = RecordingMeta::from_sensor(&series.meta);
        info.subject = Some("synthetic".into());
        info.run = Some(format!("seed-{seed}"));
        info.synthetic = true;
        write_recording(&csv, series, &info, false)?;
        files.push(SimulatedFile {
            location: series.meta.location,
            sensor_id: series.meta.sensor_id.clone(),
            csv: file_name(&csv),
            sidecar: file_name(&sidecar_path(&csv)),
            rate_hz: series.rate_hz(),
            samples: series.len(),
        });
    }
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let manifest = SimulationManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        synthetic: true,
        files,
        tool: ToolSignalSpec {
            seed,
            ..bundle.config.tool.clone()
        },
        right_arm: bundle.config.right_arm.clone(),
        left_arm: bundle.config.left_arm.clone(),
        truth: bundle
            .truth
            .iter()
            .map(|t| TruthSummary {
                location: t.meta.location,
                rate_hz: t.rate_hz(),
                rms: [rms(&t.axis(0)), rms(&t.axis(1)), rms(&t.axis(2))],
            })
            .collect(),
    };
    write_atomic(&out_dir.join("manifest.json"), to_canonical_json(&manifest)?.as_bytes())?;
    Ok(manifest)
}

pub fn cmd_report(report: &RunReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => to_canonical_json(report),
        ReportFormat::Text => Ok(render_text(report)),
    }
}

/// `freq_hz,gain_g,gain_h`, one row per frequency.
pub fn gain_curve_csv(points: &[crate::sysid::GainPoint]) -> String {
    let mut s = String::from("freq_hz,gain_g,gain_h\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.freq_hz, p.gain_g, p.gain_h);
    }
    s
}

/// `t_s,measured,simulated,predicted,residual`, one row per sample.
pub fn trace_csv(trace: &PredictionTrace, rate_hz: f64) -> String {
    let mut s = String::from("t_s,measured,simulated,predicted,residual\n");
    for i in 0..trace.y_measured.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            i as f64 / rate_hz,
            trace.y_measured[i],
            trace.y_simulated[i],
            trace.y_predicted[i],
            trace.residuals[i]
        );
    }
    s
}
