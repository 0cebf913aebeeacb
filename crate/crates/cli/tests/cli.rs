use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use haptic_core::landscape::ForceLandscape;
use haptic_core::Trace;
use tempfile::TempDir;

fn haptic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haptic"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// Temp dir holding `default.csv`, the default generated grid.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = haptic(dir.path(), &["landscape", "gen", "--out", "default.csv", "--seed", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn summary_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

#[test]
fn invert_prints_one_ampere() {
    let dir = workspace();
    let o = haptic(
        dir.path(),
        &["landscape", "invert", "--grid", "default.csv", "--distance-mm", "5", "--force-n", "0.5"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "1.00000\n");
}

#[test]
fn invert_saturation_is_a_one_line_runtime_error() {
    let dir = workspace();
    let o = haptic(
        dir.path(),
        &["landscape", "invert", "--grid", "default.csv", "--distance-mm", "5", "--force-n", "10"],
    );
    assert_eq!(code(&o), 4);
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("saturation"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn invert_out_of_range_distance_fails() {
    let dir = workspace();
    let o = haptic(
        dir.path(),
        &["landscape", "invert", "--grid", "default.csv", "--distance-mm", "36", "--force-n", "0"],
    );
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("distance"));
}

#[test]
fn mpsr_commands() {
    let dir = workspace();
    let o = haptic(
        dir.path(),
        &["landscape", "mpsr", "--grid", "default.csv", "--dmin-mm", "1", "--dmax-mm", "35"],
    );
    assert_eq!(code(&o), 0);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert_eq!(stdout(&o).trim().len(), "0.123047".len());
    assert!((v - 0.123).abs() <= 0.0005);

    let o = haptic(dir.path(), &["report", "mpsr", "--grid", "default.csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "mpsr=0.123047 at d_mm=35.0\n");
}

#[test]
fn zero_curve_file() {
    let dir = workspace();
    let o = haptic(dir.path(), &["landscape", "zero", "--grid", "default.csv", "--out", "zero.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("zero.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d_mm,I0_a");
    assert_eq!(lines.len(), 72);
    // I0(5) = b/(a·(d+d0)²) = 0.5 A
    assert!(lines.contains(&"5.0,0.5"), "{:?}", &lines[..12]);
}

#[test]
fn written_grids_round_trip_bit_for_bit() {
    let dir = workspace();
    let o = haptic(
        dir.path(),
        &["landscape", "gen", "--out", "noisy.csv", "--seed", "9", "--noise", "0.0001", "--i-min", "-1.5"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in ["default.csv", "noisy.csv"] {
        let first = fs::read_to_string(dir.path().join(name)).unwrap();
        let second = ForceLandscape::read_csv(first.as_bytes()).unwrap().to_csv_string();
        let third = ForceLandscape::read_csv(second.as_bytes()).unwrap().to_csv_string();
        assert_eq!(first, second);
        assert_eq!(second, third);
    }
}

#[test]
fn bad_generator_params_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = haptic(dir.path(), &["landscape", "gen", "--out", "g.csv", "--seed", "1", "--d0", "-1"]);
    assert_eq!(code(&o), 3);
    let o = haptic(dir.path(), &["landscape", "gen", "--out", "g.csv"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn empty_scenario_names_run_section() {
    let dir = workspace();
    write(dir.path(), "empty.cfg", "");
    let o = haptic(dir.path(), &["simulate", "--scenario", "empty.cfg", "--out", "t.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("[run]"));
    assert!(!dir.path().join("t.csv").exists());
}

#[test]
fn every_misspelled_key_is_reported() {
    let dir = workspace();
    write(
        dir.path(),
        "typo.cfg",
        "[sensor]\nlatncy_ms = 2\n[controller]\nmode = vibro\nfreq_hz = 200\nforce_n = const 1\n[run]\nduraton_s = 1\n",
    );
    let o = haptic(dir.path(), &["simulate", "--scenario", "typo.cfg", "--out", "t.csv"]);
    assert_eq!(code(&o), 3);
    let err = stderr(&o);
    for key in ["latncy_ms", "force_n", "duraton_s"] {
        assert!(err.contains(key), "{key} missing from:\n{err}");
    }
    assert!(!err.contains("`freq_hz`"));
}

#[test]
fn predictor_tap_is_on_time() {
    let dir = workspace();
    write(
        dir.path(),
        "tap.cfg",
        "[landscape]\nb = 0\n[finger]\nintent = tap\nspeed_mm_s = 500\n[predictor]\n[run]\nduration_s = 0.06\n",
    );
    let o = haptic(dir.path(), &["simulate", "--scenario", "tap.cfg", "--out", "tap.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("#summary\n"));
    let err: f64 = summary_value(&out, "onset_error_ms").unwrap().parse().unwrap();
    assert!(err.abs() <= 0.5, "{err}");
    assert_eq!(summary_value(&out, "event_count"), Some("2"));
    assert_eq!(summary_value(&out, "event_1_late"), Some("ontime"));
    assert_eq!(summary_value(&out, "event_2_late"), Some("ontime"));

    // the printed summary is the file's summary block
    let file = fs::read_to_string(dir.path().join("tap.csv")).unwrap();
    assert!(file.ends_with(&out));
    assert!(file.starts_with("t_ms,d_true_mm,d_meas_mm,v_est_mm_s,I_cmd_A,I_act_A,F_mag_N,F_contact_N,event\n"));

    let o = haptic(dir.path(), &["report", "latency", "--trace", "tap.csv"]);
    assert_eq!(code(&o), 0);
    let table = stdout(&o);
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "audio");
    assert_eq!(rows[1][0], "tactile");
    assert_eq!(rows[0][1], rows[1][1]);
    assert!(rows.iter().all(|r| r[5] == "ontime" && r[6] == "-"));
}

#[test]
fn passive_tap_reports_approach_force() {
    let dir = workspace();
    write(
        dir.path(),
        "passive.cfg",
        "[landscape]\nfile = default.csv\n[controller]\nmode = passive_surface\n[finger]\nintent = tap\n[run]\nduration_s = 0.06\n",
    );
    let o = haptic(dir.path(), &["simulate", "--scenario", "passive.cfg", "--out", "p.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let reported: f64 = summary_value(&out, "max_abs_F_mag_during_approach").unwrap().parse().unwrap();
    let contact: f64 = summary_value(&out, "contact_1_ms").unwrap().parse().unwrap();
    let trace = Trace::read(fs::read_to_string(dir.path().join("p.csv")).unwrap().as_bytes()).unwrap();
    let from_rows = trace
        .rows
        .iter()
        .filter(|r| r.t_ms < contact)
        .map(|r| r.f_mag_n.abs())
        .fold(0.0, f64::max);
    assert!((reported - from_rows).abs() <= 1e-5 * reported.max(1.0), "{reported} vs {from_rows}");
    // far from the surface the controller holds the force near zero
    let far = trace
        .rows
        .iter()
        .filter(|r| r.d_true_mm > 12.0)
        .map(|r| r.f_mag_n.abs())
        .fold(0.0, f64::max);
    assert!(far < 0.02, "{far}");
}

#[test]
fn late_audio_shows_deficit() {
    let dir = workspace();
    // 20 ms of approach cannot cover a 40 ms audio path
    write(
        dir.path(),
        "late.cfg",
        "[landscape]\nb = 0\n[finger]\nintent = tap\nspeed_mm_s = 1000\n[predictor]\naudio_latency_ms = 40\n[run]\nduration_s = 0.04\n",
    );
    let o = haptic(dir.path(), &["simulate", "--scenario", "late.cfg", "--out", "late.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = haptic(dir.path(), &["report", "latency", "--trace", "late.csv"]);
    let table = stdout(&o);
    let audio: Vec<&str> = table
        .lines()
        .find(|l| l.starts_with("audio"))
        .unwrap()
        .split_whitespace()
        .collect();
    assert_eq!(audio[5], "late");
    let deficit: f64 = audio[6].parse().unwrap();
    assert!(deficit > 0.0);
    let tactile = table.lines().find(|l| l.starts_with("tactile")).unwrap();
    assert!(tactile.contains("ontime"));
}

#[test]
fn parallel_runs_match_single_runs() {
    let dir = workspace();
    let tap = "[finger]\nintent = tap\n[predictor]\n[sensor]\nnoise_sigma = 0.002\n[run]\nduration_s = 0.05\nseed = 3\n";
    let hold = "[controller]\nmode = vibro\nfreq_hz = 250\n[run]\nduration_s = 0.02\n";
    write(dir.path(), "a.cfg", tap);
    write(dir.path(), "b.cfg", hold);
    let o = haptic(
        dir.path(),
        &["simulate", "--scenario", "a.cfg", "--out", "a.csv", "--scenario", "b.cfg", "--out", "b.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.matches("#summary").count(), 2);
    assert!(out.find("#scenario=a.cfg").unwrap() < out.find("#scenario=b.cfg").unwrap());

    let o = haptic(dir.path(), &["simulate", "--scenario", "a.cfg", "--out", "a2.csv"]);
    assert_eq!(code(&o), 0);
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let a2 = fs::read(dir.path().join("a2.csv")).unwrap();
    assert_eq!(a, a2);

    write(dir.path(), "c.cfg", &tap.replace("seed = 3", "seed = 4"));
    let o = haptic(dir.path(), &["simulate", "--scenario", "c.cfg", "--out", "c.csv"]);
    assert_eq!(code(&o), 0);
    assert_ne!(a, fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn mismatched_scenario_and_out_counts() {
    let dir = workspace();
    write(dir.path(), "a.cfg", "[run]\n");
    let o = haptic(
        dir.path(),
        &["simulate", "--scenario", "a.cfg", "--scenario", "a.cfg", "--out", "x.csv"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_trace_reports_line() {
    let dir = workspace();
    write(dir.path(), "a.cfg", "[run]\nduration_s = 0.001\n");
    let o = haptic(dir.path(), &["simulate", "--scenario", "a.cfg", "--out", "a.csv"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[5] = "0.0520833,oops,20,0,0,0,0,0,".into();
    write(dir.path(), "bad.csv", &(lines.join("\n") + "\n"));
    let o = haptic(dir.path(), &["report", "latency", "--trace", "bad.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("line 6"), "{}", stderr(&o));

    let o = haptic(dir.path(), &["report", "latency", "--trace", "missing.csv"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn trace_files_round_trip_bit_for_bit() {
    let dir = workspace();
    write(dir.path(), "a.cfg", "[finger]\nintent = sinusoid\n[predictor]\n[run]\nduration_s = 0.3\ndecimation = 16\n");
    let o = haptic(dir.path(), &["simulate", "--scenario", "a.cfg", "--out", "a.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let second = Trace::read(first.as_bytes()).unwrap().to_string_lossy();
    let third = Trace::read(second.as_bytes()).unwrap().to_string_lossy();
    assert_eq!(first, second);
    assert_eq!(second, third);
}

#[test]
fn help_documents_scenario_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = haptic(dir.path(), &["simulate", "--help"]);
    assert_eq!(code(&o), 0);
    let help = stdout(&o);
    for needle in ["[run]", "latency_ms = 1.8", "audio_latency_ms = 5", "speed_mm_s = 500", "mode = passive_surface"] {
        assert!(help.contains(needle), "{needle}");
    }
}
