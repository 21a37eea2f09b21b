use std::f64::consts::PI;

use hav_core::io::{
    cmd_analyze, cmd_identify, cmd_report, cmd_simulate, cmd_stats, gain_curve_csv, load_recording, to_canonical_json,
    write_recording, AnalysisConfig, RecordingMeta, ReportFormat, RunReport,
};
use hav_core::signal::validate_series;
use hav_core::synth::{make_experiment, ExperimentConfig, GROUND_TRUTH_RATE_HZ};
use hav_core::weighting::apply_filter;
use hav_core::{
    axis_rms, decimate, design_weighting_filter, remove_gravity, vibration_total, Assessment, Error, Location, SensorMeta,
    TriaxialSeries,
};

fn short_config(duration_s: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.tool.duration_s = duration_s;
    c
}

fn named(samples: Vec<[f64; 3]>, id: &str, location: Location, rate: f64) -> TriaxialSeries {
    validate_series(samples, SensorMeta::new(id, location, rate, 200.0)).unwrap()
}

#[test]
fn hand_ahv_matches_ground_truth_within_one_percent() {
    let bundle = make_experiment(&ExperimentConfig::default(), 21).unwrap();
    let observed = bundle.observed(Location::HandRT).unwrap();
    let report = cmd_analyze(std::slice::from_ref(observed), &AnalysisConfig::default()).unwrap();
    let got = report.exposures[0].aggregate.as_ref().unwrap().ahv;

    // The same processing applied to the noise-free truth at the sensor rate.
    let config = AnalysisConfig::default();
    let factor = (GROUND_TRUTH_RATE_HZ / 400.0) as usize;
    let truth = decimate(bundle.truth(Location::HandRT).unwrap(), factor, true).unwrap();
    let dynamic = remove_gravity(&truth, &config.gravity).unwrap();
    let weighted = apply_filter(&design_weighting_filter(&config.weighting, 400.0).unwrap(), &dynamic).unwrap();
    let rms: Vec<f64> = (0..3).map(|a| axis_rms(&weighted.axis(a)).unwrap()).collect();
    let expected = vibration_total(rms[0], rms[1], rms[2]).unwrap();

    assert!((got - expected).abs() <= 0.01 * expected, "ahv {got} vs ground truth {expected}");
}

#[test]
fn sixty_seconds_give_six_segments() {
    let bundle = make_experiment(&ExperimentConfig::default(), 1).unwrap();
    let report = cmd_analyze(std::slice::from_ref(bundle.observed(Location::ForearmRT).unwrap()), &AnalysisConfig::default()).unwrap();
    let e = &report.exposures[0];
    assert_eq!(e.segments.len(), 6);
    assert!(e.segments.iter().all(|s| s.unweighted.n == 4000));
    assert_eq!(e.aggregate.as_ref().unwrap().segments, 6);
}

#[test]
fn reduced_bandwidth_warning_at_400_hz() {
    let bundle = make_experiment(&short_config(10.0), 2).unwrap();
    let report = cmd_analyze(std::slice::from_ref(bundle.observed(Location::HandRT).unwrap()), &AnalysisConfig::default()).unwrap();
    assert!(report.warnings.iter().any(|w| w.contains("ReducedBandwidth")), "{:?}", report.warnings);
    let json = cmd_report(&report, ReportFormat::Json).unwrap();
    assert!(json.contains("ReducedBandwidth"));
}

#[test]
fn recovered_gain_follows_the_arm_chain() {
    let bundle = make_experiment(&ExperimentConfig::default(), 4).unwrap();
    let outcome = cmd_identify(
        bundle.observed(Location::HandRT).unwrap(),
        bundle.observed(Location::UpperArmRT).unwrap(),
        &AnalysisConfig::default(),
    )
    .unwrap();
    let arm = &bundle.config.right_arm;
    for ch in &outcome.channels {
        for k in 1..=40 {
            let f = 160.0 * k as f64 / 40.0;
            let truth = arm.chain_gain(f, GROUND_TRUTH_RATE_HZ).unwrap();
            let got = ch.model.gain_at(f).unwrap().gain_g;
            assert!((got - truth).abs() <= 0.05 * truth, "{f} Hz: |G| {got} vs {truth}");
        }
    }
}

#[test]
fn delayed_copy_is_identified_as_unity() {
    let bundle = make_experiment(&short_config(10.0), 5).unwrap();
    let input = remove_gravity(bundle.observed(Location::HandRT).unwrap(), &Default::default()).unwrap();
    let mut delayed = vec![[0.0; 3]];
    delayed.extend_from_slice(&input.samples()[..input.len() - 1]);
    let output = named(delayed, "copy", Location::ForearmRT, 400.0);
    let mut config = AnalysisConfig::default();
    config.sysid.order = 2;
    config.sysid.remove_gravity = false;
    let outcome = cmd_identify(&input, &output, &config).unwrap();
    for (ch, r) in outcome.channels.iter().zip(&outcome.report.identifications) {
        let fit = r.fit.as_ref().unwrap();
        assert!(fit.nrmse_sim_percent >= 99.0, "{}", fit.nrmse_sim_percent);
        for f in [0.0, 20.0, 80.0, 150.0, 190.0] {
            let g = ch.model.gain_at(f).unwrap().gain_g;
            assert!((g - 1.0).abs() < 1e-3, "{f} Hz: {g}");
        }
    }
}

#[test]
fn mismatched_rates_are_rejected() {
    let a = named(vec![[1.0, 0.0, 0.0]; 800], "a", Location::HandRT, 400.0);
    let b = named(vec![[1.0, 0.0, 0.0]; 400], "b", Location::NearUpperArmRT, 200.0);
    let err = cmd_identify(&a, &b, &AnalysisConfig::default()).unwrap_err();
    assert!(matches!(err.root(), Error::RateMismatch { .. }), "{err}");
}

/// Sine whose amplitude changes every 10 s window.
fn stepped(levels: &[f64], id: &str, location: Location) -> TriaxialSeries {
    let rate = 400.0;
    let per = 4000;
    let samples = levels
        .iter()
        .flat_map(|&a| {
            (0..per).map(move |i| {
                let s = a * (2.0 * PI * 40.0 * i as f64 / rate).sin();
                [s, 0.5 * s, 9.80665 + 0.25 * s]
            })
        })
        .collect();
    named(samples, id, location, rate)
}

#[test]
fn linear_columns_give_significant_regression() {
    let levels = [1.0, 3.0, 2.0, 5.0, 4.0, 6.0, 2.5, 3.5];
    let hand = stepped(&levels, "h", Location::HandRT);
    let tweak = [0.0, 0.01, -0.01, 0.02, 0.0, -0.02, 0.01, 0.0];
    let fore: Vec<f64> = levels.iter().zip(tweak).map(|(l, t)| 0.6 * l + t).collect();
    let forearm = stepped(&fore, "f", Location::ForearmRT);
    let config = AnalysisConfig::default();
    let report = cmd_analyze(&[hand, forearm], &config).unwrap();
    let stats = cmd_stats(&report, &config).unwrap();
    let reg = stats
        .regressions
        .iter()
        .find(|r| r.predictor == Location::HandRT && r.response == Location::ForearmRT)
        .unwrap();
    let result = reg.result.as_ref().unwrap();
    assert!(result.p < 1e-4, "p = {}", result.p);
    assert!(reg.significant);
    assert_eq!(stats.significance, 0.05);
}

#[test]
fn identical_columns_warn_and_continue() {
    let levels = [1.0, 2.0, 3.0];
    let hand = stepped(&levels, "h", Location::HandRT);
    let tool = stepped(&levels, "t", Location::Tool);
    let config = AnalysisConfig::default();
    let mut report = cmd_analyze(&[hand, tool], &config).unwrap();
    let stats = cmd_stats(&report, &config).unwrap();
    let pair = &stats.t_tests[0];
    assert!(pair.result.is_none());
    assert!(pair.warning.as_deref().unwrap().contains("identical"), "{:?}", pair.warning);
    report.statistics = Some(stats);
    let text = cmd_report(&report, ReportFormat::Text).unwrap();
    for label in ["Adjusted R²", "F(1,", "p-value"] {
        assert!(text.contains(label), "missing {label}");
    }
}

#[test]
fn still_recording_is_below_action() {
    let still = named(vec![[0.0, 0.0, 9.80665]; 8000], "still", Location::HandRT, 400.0);
    let report = cmd_analyze(&[still], &AnalysisConfig::default()).unwrap();
    assert!(report.exposures[0].segments.iter().all(|s| s.ahv == 0.0 && s.assessment == Assessment::BelowAction));
}

#[test]
fn simulated_files_round_trip_and_manifest_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_config(5.0);
    let manifest = cmd_simulate(&config, 17, dir.path()).unwrap();
    let bundle = make_experiment(&config, 17).unwrap();
    let mut listed: Vec<Location> = manifest.files.iter().map(|f| f.location).collect();
    listed.sort();
    assert_eq!(listed, Location::ALL.to_vec());
    for f in &manifest.files {
        let loaded = load_recording(&dir.path().join(&f.csv)).unwrap();
        let original = bundle.observed(f.location).unwrap();
        assert_eq!(loaded.samples(), original.samples(), "{}", f.csv);
        assert_eq!(loaded.meta.rate_hz, original.meta.rate_hz);
    }
}

#[test]
fn machine_report_round_trips() {
    let bundle = make_experiment(&short_config(20.0), 3).unwrap();
    let recs = [Location::HandRT, Location::Tool].map(|l| bundle.observed(l).unwrap().clone());
    let config = AnalysisConfig::default();
    let mut report = cmd_analyze(&recs, &config).unwrap();
    report.statistics = Some(cmd_stats(&report, &config).unwrap());
    let json = cmd_report(&report, ReportFormat::Json).unwrap();
    let back = RunReport::from_json(&json).unwrap();
    assert_eq!(to_canonical_json(&back).unwrap(), json);
    assert_eq!(back.exposures.len(), report.exposures.len());
    let (a, b) = (back.exposures[0].aggregate.as_ref().unwrap().ahv, report.exposures[0].aggregate.as_ref().unwrap().ahv);
    assert!((a - b).abs() <= 1e-14 * b);
}

#[test]
fn gain_table_has_one_row_per_frequency() {
    let bundle = make_experiment(&short_config(10.0), 8).unwrap();
    let mut config = AnalysisConfig::default();
    config.sysid.order = 3;
    config.sysid.frequency_points = 37;
    let outcome = cmd_identify(
        bundle.observed(Location::HandRT).unwrap(),
        bundle.observed(Location::ForearmRT).unwrap(),
        &config,
    )
    .unwrap();
    for r in &outcome.report.identifications {
        assert_eq!(r.frequency_response.len(), 37);
        let table = gain_curve_csv(&r.frequency_response);
        assert_eq!(table.lines().count(), 38);
    }
}

#[test]
fn errors_name_the_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let s = named(vec![[0.5, 1.0, 9.8]; 10], "bad", Location::HandRT, 400.0);
    write_recording(&path, &s, &RecordingMeta::from_sensor(&s.meta), false).unwrap();
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("1.0,oops,2.0\n");
    std::fs::write(&path, text).unwrap();
    let msg = load_recording(&path).unwrap_err().to_string();
    assert!(msg.contains("bad.csv"), "{msg}");
    assert!(msg.contains("line 12"), "{msg}");
}
