use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ccccta::circuit_file::CircuitFile;
use tempfile::TempDir;

const Q1: &str = "# Q = 1 design point\nib1=80u\nis1=320u\nib2=80u\nis2=2u\nc1=5n\nc2=5n\n";
const OSC: &str = "ib1=56.5u\nis1=200u\nib2=45u\nis2=225u\nc1=5n\nc2=5n\n";

fn ccccta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccccta"))
        .args(args)
        .env_remove("CCCCTA_VT")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report_value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .to_string()
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn response_band_pass() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "q1.txt", Q1);
    let csv = dir.path().join("bp.csv");
    let o = ccccta(&["response", "--circuit", s(&circuit), "--mode", "bp", "--f-start", "10k", "--f-stop", "10M", "--ppd", "50", "--out", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, "freq_hz,mag_db,phase_deg");
    assert_eq!(rows.len(), 151);
    assert_eq!(rows[0][0], 10e3);
    assert_eq!(rows[150][0], 10e6);
    let peak = rows.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert!((peak[0] / 197e3).ln().abs() < (10f64).ln() / 100.0);

    let report = stdout(&o);
    assert!(report.contains("constraint="));
    let f0: f64 = report_value(&report, "f0_hz").parse().unwrap();
    assert!((f0 / 197.02e3 - 1.0).abs() < 1e-4);
}

#[test]
fn response_low_pass_starts_flat() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "q1.txt", Q1);
    let csv = dir.path().join("lp.csv");
    let o = ccccta(&["response", "--circuit", s(&circuit), "--mode", "lp", "--out", s(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = read_csv(&csv);
    assert!(rows[0][1].abs() < 0.1);
    assert!(stdout(&o).contains("satisfied"));
}

#[test]
fn response_csv_is_byte_stable_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "q1.txt", Q1);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = ccccta(&["response", "--circuit", s(&circuit), "--mode", "ap", "--unwrap", "--out", s(out)]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    // full precision: values reproduce the library exactly
    let c = CircuitFile::parse(Q1).unwrap().circuit(25.85e-3).unwrap();
    let h = ccccta::biquad::transfer_function(&c, &ccccta::biquad::FilterMode::AllPass.weights()).unwrap();
    let (_, rows) = read_csv(&a);
    for row in rows.iter().step_by(17) {
        let p = ccccta::biquad::evaluate_response(&h, row[0]).unwrap();
        assert_eq!(p.magnitude_db, row[1]);
    }
}

#[test]
fn response_to_stdout_moves_report_to_stderr() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "q1.txt", Q1);
    let o = ccccta(&["response", "--circuit", s(&circuit), "--mode", "hp", "--f-start", "1k", "--f-stop", "10k", "--ppd", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("freq_hz,mag_db,phase_deg\n"));
    assert_eq!(stdout(&o).lines().count(), 6);
    assert!(stderr(&o).contains("f0_hz="));
}

#[test]
fn response_input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = write(&dir, "missing.txt", &Q1.replace("c2=5n\n", ""));
    let o = ccccta(&["response", "--circuit", s(&missing), "--mode", "bp"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("c2"));

    let bad = write(&dir, "bad.txt", &Q1.replace("is1=320u", "is1=320x"));
    let o = ccccta(&["response", "--circuit", s(&bad), "--mode", "bp"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let good = write(&dir, "q1.txt", Q1);
    let o = ccccta(&["response", "--circuit", s(&good), "--mode", "bp", "--f-start", "1M", "--f-stop", "1k"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ccccta(&["response", "--circuit", s(&good), "--mode", "xx"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ccccta(&["response", "--circuit", "/nonexistent/file", "--mode", "bp"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn design_filter_published_point() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("design.txt");
    let o = ccccta(&["design", "filter", "--f0", "197.02k", "--q", "1", "--c", "5n", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let file = CircuitFile::parse(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((file.ib1 / 80e-6 - 1.0).abs() < 1e-5);
    assert!((file.is1 / 320e-6 - 1.0).abs() < 1e-5);

    // the written file reproduces the achieved values through `response`
    let achieved: f64 = report_value(&stdout(&o), "achieved_f0_hz").parse().unwrap();
    let r = ccccta(&["response", "--circuit", s(&out), "--mode", "bp", "--out", s(&dir.path().join("r.csv"))]);
    let f0: f64 = report_value(&stdout(&r), "f0_hz").parse().unwrap();
    assert_eq!(f0, achieved);
    let q: f64 = report_value(&stdout(&r), "q_approx").parse().unwrap();
    assert!((q - 1.0).abs() < 1e-12);
}

#[test]
fn design_constraint_conflict() {
    let o = ccccta(&["design", "filter", "--mode", "ap", "--q", "1", "--c", "5n"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning:"));
    let o = ccccta(&["design", "filter", "--mode", "ap", "--q", "1", "--c", "5n", "--strict"]);
    assert_eq!(o.status.code(), Some(3));
    let o = ccccta(&["design", "filter", "--mode", "ap", "--q", "1.4142135623730951", "--c", "5n", "--strict"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn design_input_errors() {
    assert_eq!(ccccta(&["design", "filter", "--q", "1"]).status.code(), Some(2));
    assert_eq!(ccccta(&["design", "filter", "--q", "-1", "--c", "5n"]).status.code(), Some(2));
    assert_eq!(ccccta(&["design", "filter", "--q", "1", "--c", "5n", "--budget", "0.5"]).status.code(), Some(2));
    assert_eq!(ccccta(&["design", "oscillator", "--f", "1k", "--c1", "1n"]).status.code(), Some(2));
}

#[test]
fn design_oscillator_margin() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("osc.txt");
    let o = ccccta(&["design", "oscillator", "--f", "130.9k", "--c", "5n", "--margin", "0.05", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let file = CircuitFile::parse(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((file.is2 / (4.2 * file.ib1) - 1.0).abs() < 1e-15);
    let margin: f64 = report_value(&stdout(&o), "co_margin").parse().unwrap();
    assert!((margin - 0.05).abs() < 1e-12);
}

#[test]
fn oscillate_with_positive_margin() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "osc.txt", &OSC.replace("is2=225u", "is2=231.65u"));
    let csv = dir.path().join("osc.csv");
    let o = ccccta(&["oscillate", "--circuit", s(&circuit), "--out", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    assert_eq!(report_value(&report, "settled"), "true");
    let est: f64 = report_value(&report, "est_freq_hz").parse().unwrap();
    let fo: f64 = report_value(&report, "fo_hz").parse().unwrap();
    assert!((est / fo - 1.0).abs() < 0.02);
    assert!((fo / 130.9e3 - 1.0).abs() < 1e-3);
    let phase: f64 = report_value(&report, "phase_o2_vs_o1_deg").parse().unwrap();
    assert!((phase + 90.0).abs() < 2.0);

    let (header, rows) = read_csv(&csv);
    assert_eq!(header, "t_s,v_o1,v_o2,v_o3");
    assert_eq!(rows.len(), 50_001);
    assert!(rows.iter().all(|r| r[3] == -r[2]));
}

#[test]
fn oscillate_with_published_bias_does_not_settle() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "osc.txt", OSC);
    let o = ccccta(&["oscillate", "--circuit", s(&circuit), "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout(&o);
    assert_eq!(report_value(&report, "settled"), "false");
    let margin: f64 = report_value(&report, "co_margin").parse().unwrap();
    assert!((margin + 0.0044).abs() < 1e-4);
}

#[test]
fn oscillate_errors() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "osc.txt", OSC);
    let o = ccccta(&["oscillate", "--circuit", s(&circuit), "--dt", "100n"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let runaway = write(&dir, "runaway.txt", &OSC.replace("is2=225u", "is2=20m"));
    let o = ccccta(&["oscillate", "--circuit", s(&runaway), "--v-limit", "inf", "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("diverged at t ="));
}

#[test]
fn sensitivity_table() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "q1.txt", Q1);
    let o = ccccta(&["sensitivity", "--circuit", s(&circuit)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        let analytic: f64 = r[2].parse().unwrap();
        let diff: f64 = r[4].parse().unwrap();
        assert!([-0.5, 0.0, 0.5].contains(&analytic));
        assert!(diff < 1e-3);
    }
    let zero_rows: Vec<_> = rows.iter().filter(|r| r[1] == "w0" && (r[0] == "I_S2" || r[0] == "I_B2")).collect();
    assert_eq!(zero_rows.len(), 2);
    assert!(zero_rows.iter().all(|r| r[3].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn verify_passes_and_honours_vt_override() {
    let o = ccccta(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for i in ["30uA", "60uA", "120uA", "240uA"] {
        assert!(text.contains(i), "{i}");
    }
    assert!(!text.contains("FAIL"));

    let o = Command::new(env!("CARGO_BIN_EXE_ccccta"))
        .arg("verify")
        .env("CCCCTA_VT", "30m")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("filter f0") && l.ends_with("FAIL")));

    // flag wins over the environment
    let o = Command::new(env!("CARGO_BIN_EXE_ccccta"))
        .args(["verify", "--vt", "25.85m"])
        .env("CCCCTA_VT", "30m")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));

    let o = Command::new(env!("CARGO_BIN_EXE_ccccta"))
        .arg("verify")
        .env("CCCCTA_VT", "warm")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
