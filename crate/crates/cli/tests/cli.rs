use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hav_core::io::RunReport;

fn hav() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hav"));
    c.env_remove("HAV_CONFIG");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("hav runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Simulates a short run into `dir` and returns its path.
fn simulated(dir: &Path, seconds: &str) -> PathBuf {
    let out = run(hav().args(["simulate", "--seed", "3", "--duration-s", seconds, "--out-dir"]).arg(dir));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 8);
    dir.to_path_buf()
}

fn segments(report_json: &str) -> usize {
    RunReport::from_json(report_json).unwrap().exposures[0].segments.len()
}

#[test]
fn simulate_analyze_stats_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = simulated(&tmp.path().join("sim"), "20");
    let report = tmp.path().join("analysis.json");
    let out = run(hav()
        .arg("analyze")
        .arg(dir.join("HandRT.csv"))
        .arg(dir.join("ForearmRT.csv"))
        .arg(dir.join("Tool.csv"))
        .arg("--out")
        .arg(&report));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(RunReport::from_json(&text).unwrap().exposures.len(), 3);
    assert_eq!(segments(&text), 2);

    let out = run(hav().arg("stats").arg(&report).args(["--format", "text"]));
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("p-value"));

    let out = run(hav().arg("report").arg(&report).args(["--format", "text"]));
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("HandRT"));
}

#[test]
fn identify_writes_models_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = simulated(&tmp.path().join("sim"), "10");
    let models = tmp.path().join("models");
    let out = run(hav()
        .arg("identify")
        .arg("--input")
        .arg(dir.join("HandRT.csv"))
        .arg("--output")
        .arg(dir.join("ForearmRT.csv"))
        .args(["--order", "4", "--pair", "x:x", "--frequency-points", "11", "--out-dir"])
        .arg(&models));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = RunReport::from_json(&stdout(&out)).unwrap();
    assert_eq!(report.identifications.len(), 1);
    for name in ["model_xx.json", "gain_xx.csv", "trace_xx.csv", "report.json"] {
        assert!(models.join(name).is_file(), "missing {name}");
    }
    let gain = std::fs::read_to_string(models.join("gain_xx.csv")).unwrap();
    assert_eq!(gain.lines().count(), 12);

    let plots = tmp.path().join("plots");
    let out = run(hav().arg("report").arg(models.join("report.json")).arg("--plots").arg(&plots));
    assert_eq!(code(&out), 0);
    assert!(plots.join("gain_xx.csv").is_file());
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = simulated(&tmp.path().join("sim"), "20");
    let config = tmp.path().join("hav.toml");
    std::fs::write(&config, "window_s = 5.0\n").unwrap();
    let hand = dir.join("HandRT.csv");

    let default = stdout(&run(hav().arg("analyze").arg(&hand)));
    assert_eq!(segments(&default), 2);

    let from_env = stdout(&run(hav().env("HAV_CONFIG", &config).arg("analyze").arg(&hand)));
    assert_eq!(segments(&from_env), 4);

    let from_flag = stdout(&run(hav().arg("analyze").arg("--config").arg(&config).arg(&hand)));
    assert_eq!(segments(&from_flag), 4);

    let overridden = stdout(&run(hav().env("HAV_CONFIG", &config).arg("analyze").arg(&hand).args(["--window-s", "10"])));
    assert_eq!(segments(&overridden), 2);
}

#[test]
fn input_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(hav().arg("analyze").arg(tmp.path().join("missing.csv")));
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    assert_eq!(code(&run(hav().arg("analyze"))), 1);
    assert_eq!(code(&run(hav().arg("frobnicate"))), 1);

    let config = tmp.path().join("bad.toml");
    std::fs::write(&config, "window_s = -1.0\n").unwrap();
    assert_eq!(code(&run(hav().env("HAV_CONFIG", &config).args(["simulate", "--out-dir"]).arg(tmp.path()))), 1);

    assert_eq!(code(&run(hav().arg("--help"))), 0);
}

#[test]
fn strict_identify_exits_with_two_on_iteration_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = simulated(&tmp.path().join("sim"), "10");
    let base = || {
        let mut c = hav();
        c.arg("identify")
            .arg("--input")
            .arg(dir.join("HandRT.csv"))
            .arg("--output")
            .arg(dir.join("UpperArmRT.csv"))
            .args(["--order", "6", "--pair", "y:y", "--max-iter", "1", "--tolerance", "0"]);
        c
    };
    assert_eq!(code(&run(&mut base())), 0);
    let out = run(base().arg("--strict"));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));
}

#[test]
fn fail_on_limit_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = simulated(&tmp.path().join("sim"), "10");
    let hand = dir.join("HandRT.csv");
    assert_eq!(code(&run(hav().arg("analyze").arg(&hand).args(["--limit", "0.5", "--action", "0.25"]))), 0);
    let out = run(hav().arg("analyze").arg(&hand).args(["--limit", "0.5", "--action", "0.25", "--fail-on-limit"]));
    assert_eq!(code(&out), 3);
    assert!(RunReport::from_json(&stdout(&out)).is_ok());
    assert_eq!(code(&run(hav().arg("analyze").arg(&hand).args(["--limit", "1000", "--action", "500", "--fail-on-limit"]))), 0);
}
