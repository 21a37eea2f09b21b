//! Recording files, configuration, reports and the command pipeline.

mod config;
mod pipeline;
mod recording;
mod report;

use std::io::Write;
use std::path::Path;

pub use config::{AnalysisConfig, GravityScope, StatsConfig, SysidConfig, CONFIG_ENV};
pub use pipeline::{
    cmd_analyze, cmd_identify, cmd_report, cmd_simulate, cmd_stats, gain_curve_csv, trace_csv, FittedChannel,
    IdentifyOutcome, SimulatedFile, SimulationManifest, TruthSummary,
};
pub use recording::{load_recording, load_recording_with_meta, sidecar_path, write_recording, RecordingMeta, Units};
pub use report::{
    to_canonical_json, AggregateExposure, IdentificationResult, PairRegression, PairTest, ReportFormat, RunReport,
    SensorExposure, StatisticsSection,
};

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
