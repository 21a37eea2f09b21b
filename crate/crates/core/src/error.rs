use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // signal handling
    #[error("input contains no samples")]
    EmptyInput,
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("window of {window_s} s is longer than the series ({series_s} s)")]
    WindowLongerThanSeries { window_s: f64, series_s: f64 },
    #[error("invalid decimation factor {0}")]
    InvalidFactor(usize),
    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    RateMismatch { left: f64, right: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    // weighting and exposure
    #[error("sample rate {rate_hz} Hz too low for a high-pass corner at {f1} Hz")]
    RateTooLow { rate_hz: f64, f1: f64 },
    #[error("segment is empty")]
    EmptySegment,
    #[error("negative RMS component {0}")]
    NegativeComponent(f64),
    #[error("durations must be positive")]
    NonPositiveDuration,
    #[error("thresholds must satisfy 0 < action < limit (got {action}, {limit})")]
    InvalidThresholds { action: f64, limit: f64 },

    // identification
    #[error("model is unstable: {0}")]
    UnstableModel(String),
    #[error("noise model numerator has roots on or outside the unit circle")]
    NonInvertibleNoiseModel,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("input signal has zero variance")]
    DegenerateInput,
    #[error("frequency {freq_hz} Hz outside [0, {nyquist_hz}] Hz")]
    FrequencyOutOfRange { freq_hz: f64, nyquist_hz: f64 },
    #[error("reference signal is constant")]
    ConstantReference,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid model order: {0}")]
    InvalidOrder(String),
    #[error("linear algebra failure: {0}")]
    Numerical(String),

    // statistics
    #[error("all paired differences are identical")]
    ZeroVarianceDifferences,
    #[error("need at least {needed} pairs, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("predictor is constant")]
    ConstantPredictor,
    #[error("response is constant")]
    ConstantResponse,
    #[error("invalid degrees of freedom")]
    InvalidDegreesOfFreedom,

    // synthesis
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("unstable stage: {0}")]
    UnstableStage(String),
    #[error("sensor rate {sensor_hz} Hz exceeds source rate {source_hz} Hz")]
    RateTooHigh { sensor_hz: f64, source_hz: f64 },

    // io
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("metadata field `{0}` missing")]
    MetadataMissing(String),
    #[error("time column not uniformly spaced at line {line}")]
    NonUniformTime { line: usize },
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("unknown report format `{0}`")]
    UnknownFormat(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips any number of context layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by bad input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self.root(),
            Error::Numerical(_) | Error::UnstableModel(_) | Error::NonInvertibleNoiseModel
        )
    }
}

pub trait ResultExt<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| Error::Context {
            context: ctx(),
            source: Box::new(e),
        })
    }
}
