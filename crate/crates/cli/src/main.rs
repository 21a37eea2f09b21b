use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hav_core::io::{
    cmd_analyze, cmd_identify, cmd_report, cmd_simulate, cmd_stats, gain_curve_csv, load_recording, trace_csv,
    write_atomic, AnalysisConfig, GravityScope, ReportFormat, RunReport, CONFIG_ENV,
};
use hav_core::sysid::ModelFile;
use hav_core::{Assessment, Error, InitPolicy, TrailingPolicy};

const EXIT_INPUT: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_LIMIT: u8 = 3;

/// Hand-arm vibration exposure and transfer-function analysis.
///
/// Settings come from built-in defaults, overridden by the config file
/// (--config or the HAV_CONFIG environment variable), overridden by flags.
#[derive(Parser, Debug)]
#[command(name = "hav", version)]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exposure per segment: gravity removal, weighting, RMS, ahv, A(8).
    Analyze(AnalyzeArgs),
    /// Fit Box-Jenkins models from one recording to another.
    Identify(IdentifyArgs),
    /// Paired t-tests and regressions on an analyze report.
    Stats(StatsArgs),
    /// Write a seeded synthetic experiment as recordings.
    Simulate(SimulateArgs),
    /// Render a saved report.
    Report(ReportArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Text => ReportFormat::Text,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum InitArg {
    FirstSample,
    Zero,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ScopeArg {
    Run,
    Segment,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TrailingArg {
    Drop,
    Keep,
    Strict,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format [default: json].
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Recording CSV files; each needs a `<name>.meta.toml` sidecar.
    #[arg(required = true)]
    recordings: Vec<PathBuf>,
    /// Segment length in seconds [default: 10].
    #[arg(long)]
    window_s: Option<f64>,
    /// Gravity estimator smoothing weight [default: 0.05].
    #[arg(long)]
    beta: Option<f64>,
    /// Gravity estimator start value [default: first-sample].
    #[arg(long, value_enum)]
    init_policy: Option<InitArg>,
    /// Run the gravity estimator over the whole run or restart per segment [default: run].
    #[arg(long, value_enum)]
    gravity_scope: Option<ScopeArg>,
    /// Handling of the incomplete final window [default: drop].
    #[arg(long, value_enum)]
    trailing: Option<TrailingArg>,
    /// Skip the frequency weighting.
    #[arg(long)]
    no_weighting: bool,
    /// Daily exposure duration for A(8) in seconds [default: 28800].
    #[arg(long)]
    exposure_s: Option<f64>,
    /// Exposure action value in m/s² [default: 2.5].
    #[arg(long)]
    action: Option<f64>,
    /// Exposure limit value in m/s² [default: 5].
    #[arg(long)]
    limit: Option<f64>,
    /// Also run the statistics on the analyzed recordings.
    #[arg(long)]
    stats: bool,
    /// Exit with status 3 when any segment reaches the limit value.
    #[arg(long)]
    fail_on_limit: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct IdentifyArgs {
    /// Input recording (e.g. the hand sensor).
    #[arg(long)]
    input: PathBuf,
    /// Output recording (e.g. the upper-arm sensor).
    #[arg(long)]
    output: PathBuf,
    /// Shared order of B, A, C and D [default: 20].
    #[arg(long)]
    order: Option<usize>,
    /// Iteration cap of the optimizer [default: 200].
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative cost decrease that stops the optimizer [default: 1e-9].
    #[arg(long)]
    tolerance: Option<f64>,
    /// Input delay in samples [default: 1].
    #[arg(long)]
    delay: Option<usize>,
    /// Fit every analysis window separately.
    #[arg(long)]
    per_segment: bool,
    /// Fit frequency-weighted instead of unweighted signals.
    #[arg(long)]
    weighted: bool,
    /// Fit the raw signals without gravity removal.
    #[arg(long)]
    keep_gravity: bool,
    /// Decimate the faster recording when the rates differ by an integer factor.
    #[arg(long)]
    decimate: bool,
    /// Axis pair IN:OUT such as x:x or 0:2; repeatable [default: x:x y:y z:z].
    #[arg(long = "pair", value_parser = parse_pair)]
    pairs: Vec<[usize; 2]>,
    /// Points on the frequency-response grid [default: 101].
    #[arg(long)]
    frequency_points: Option<usize>,
    /// Directory for the report, model files and plot tables.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Exit with status 2 when any fit fails to converge.
    #[arg(long)]
    strict: bool,
    /// Format of the report on stdout [default: json].
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Report written by `analyze`.
    report: PathBuf,
    /// Significance level [default: 0.05].
    #[arg(long)]
    significance: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Length of the run in seconds [default: 60].
    #[arg(long)]
    duration_s: Option<f64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Report in JSON form.
    report: PathBuf,
    /// Directory for gain-curve CSV tables.
    #[arg(long)]
    plots: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_axis(s: &str) -> Result<usize, String> {
    match s.trim() {
        "x" | "0" => Ok(0),
        "y" | "1" => Ok(1),
        "z" | "2" => Ok(2),
        other => Err(format!("unknown axis `{other}`")),
    }
}

fn parse_pair(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected IN:OUT, got `{s}`"))?;
    Ok([parse_axis(a)?, parse_axis(b)?])
}

enum Failure {
    Error(Error),
    Exit(u8),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_report(path: &Path) -> Result<RunReport, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunReport::from_json(&text).map_err(|e| Error::Context {
        context: path.display().to_string(),
        source: Box::new(e),
    })
}

fn analyze(args: AnalyzeArgs, mut config: AnalysisConfig) -> Result<(), Failure> {
    if let Some(v) = args.window_s {
        config.window_s = v;
    }
    if let Some(v) = args.beta {
        config.gravity.beta = v;
    }
    if let Some(v) = args.init_policy {
        config.gravity.init_policy = match v {
            InitArg::FirstSample => InitPolicy::FirstSample,
            InitArg::Zero => InitPolicy::Zero,
        };
    }
    if let Some(v) = args.gravity_scope {
        config.gravity_scope = match v {
            ScopeArg::Run => GravityScope::Run,
            ScopeArg::Segment => GravityScope::Segment,
        };
    }
    if let Some(v) = args.trailing {
        config.trailing = match v {
            TrailingArg::Drop => TrailingPolicy::Drop,
            TrailingArg::Keep => TrailingPolicy::Keep,
            TrailingArg::Strict => TrailingPolicy::Strict,
        };
    }
    if args.no_weighting {
        config.weighting.enabled = false;
    }
    if let Some(v) = args.exposure_s {
        config.exposure_s = v;
    }
    if let Some(v) = args.action {
        config.thresholds.action = v;
    }
    if let Some(v) = args.limit {
        config.thresholds.limit = v;
    }
    let recordings = args
        .recordings
        .iter()
        .map(|p| load_recording(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = cmd_analyze(&recordings, &config)?;
    if args.stats {
        report.statistics = Some(cmd_stats(&report, &config)?);
    }
    emit(&cmd_report(&report, args.output.format.into())?, args.output.out.as_deref())?;
    if args.fail_on_limit && report.worst_assessment() == Some(Assessment::AboveLimit) {
        eprintln!("limit value reached");
        return Err(Failure::Exit(EXIT_LIMIT));
    }
    Ok(())
}

fn identify(args: IdentifyArgs, mut config: AnalysisConfig) -> Result<(), Failure> {
    let sc = &mut config.sysid;
    if let Some(v) = args.order {
        sc.order = v;
    }
    if let Some(v) = args.max_iter {
        sc.options.max_iterations = v;
    }
    if let Some(v) = args.tolerance {
        sc.options.tolerance = v;
    }
    if let Some(v) = args.delay {
        sc.options.input_delay = v;
    }
    if let Some(v) = args.frequency_points {
        sc.frequency_points = v;
    }
    sc.per_segment |= args.per_segment;
    sc.weighted |= args.weighted;
    sc.decimate_to_match |= args.decimate;
    if args.keep_gravity {
        sc.remove_gravity = false;
    }
    if !args.pairs.is_empty() {
        sc.pairing = args.pairs.clone();
    }
    let input = load_recording(&args.input)?;
    let output = load_recording(&args.output)?;
    let outcome = cmd_identify(&input, &output, &config)?;
    let report = &outcome.report;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for ch in &outcome.channels {
            let result = &report.identifications[ch.result_index];
            let name = result.model_file.clone().unwrap_or_else(|| format!("model_{}.json", ch.result_index));
            ModelFile::new(ch.model.clone(), result.fit.clone()).save(&dir.join(&name))?;
            let stem = name.trim_start_matches("model_").trim_end_matches(".json");
            write_atomic(&dir.join(format!("gain_{stem}.csv")), gain_curve_csv(&result.frequency_response).as_bytes())?;
            write_atomic(&dir.join(format!("trace_{stem}.csv")), trace_csv(&ch.trace, ch.model.rate_hz).as_bytes())?;
        }
        write_atomic(&dir.join("report.json"), cmd_report(report, ReportFormat::Json)?.as_bytes())?;
    }
    emit(&cmd_report(report, args.format.into())?, None)?;
    if args.strict && report.unconverged_fits() > 0 {
        eprintln!("{} fit(s) did not converge", report.unconverged_fits());
        return Err(Failure::Exit(EXIT_NUMERICAL));
    }
    Ok(())
}

fn stats(args: StatsArgs, mut config: AnalysisConfig) -> Result<(), Failure> {
    let mut report = load_report(&args.report)?;
    if let Some(v) = args.significance {
        config.stats.significance = v;
    }
    report.statistics = Some(cmd_stats(&report, &config)?);
    emit(&cmd_report(&report, args.output.format.into())?, args.output.out.as_deref())?;
    Ok(())
}

fn simulate(args: SimulateArgs, mut config: AnalysisConfig) -> Result<(), Failure> {
    if let Some(d) = args.duration_s {
        config.synth.tool.duration_s = d;
    }
    let manifest = cmd_simulate(&config.synth, args.seed, &args.out_dir)?;
    for f in &manifest.files {
        println!("{}", args.out_dir.join(&f.csv).display());
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let report = load_report(&args.report)?;
    if let Some(dir) = &args.plots {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, id) in report.identifications.iter().enumerate() {
            if id.frequency_response.is_empty() {
                continue;
            }
            let name = id
                .model_file
                .as_deref()
                .map(|m| m.trim_start_matches("model_").trim_end_matches(".json").to_string())
                .unwrap_or_else(|| i.to_string());
            write_atomic(&dir.join(format!("gain_{name}.csv")), gain_curve_csv(&id.frequency_response).as_bytes())?;
        }
    }
    emit(&cmd_report(&report, args.output.format.into())?, args.output.out.as_deref())?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (config, _) = AnalysisConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Analyze(a) => analyze(a, config),
        Command::Identify(a) => identify(a, config),
        Command::Stats(a) => stats(a, config),
        Command::Simulate(a) => simulate(a, config),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Exit(code)) => ExitCode::from(code),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.root().is_input_error() { EXIT_INPUT } else { EXIT_NUMERICAL })
        }
    }
}
