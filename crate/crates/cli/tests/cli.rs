use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aakwfa::Wfa;
use tempfile::TempDir;

fn aakwfa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aakwfa")).args(args).output().unwrap()
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path
}

fn even_geometric_table(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| if i % 2 == 0 { (8.0 / 9.0) * 9f64.powi(-(i as i32 / 2)) } else { 0.0 })
        .collect()
}

fn spectrum(output: &Output) -> Vec<f64> {
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("j,sigma"));
    lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

fn setup() -> (TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let table = write_json(dir.path(), "table.json", &even_geometric_table(60));
    let table = table.to_str().unwrap().to_owned();
    (dir, table)
}

#[test]
fn truncation_not_above_k_is_a_config_error() {
    let (dir, table) = setup();
    let out = dir.path().join("out");
    let output = aakwfa(&[
        "approximate", "--oracle", &table, "--kind", "table", "--k", "3", "--n", "3", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("n > k"));
}

#[test]
fn mismatched_oracle_kind_is_a_config_error() {
    let (_dir, table) = setup();
    let output = aakwfa(&["spectrum", "--oracle", &table, "--kind", "elman"]);
    assert_eq!(output.status.code(), Some(2));
    let output = aakwfa(&["spectrum", "--oracle", &table, "--kind", "wfa"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(aakwfa(&["spectrum", "--bogus"]).status.code(), Some(2));
}

#[test]
fn spectrum_of_the_even_geometric_table() {
    let (_dir, table) = setup();
    let s = spectrum(&aakwfa(&["spectrum", "--oracle", &table, "--kind", "table", "--n", "40"]));
    assert_eq!(s.len(), 40);
    assert!((s[0] - 0.9).abs() < 1e-12);
    assert!((s[1] - 0.1).abs() < 1e-12);
}

#[test]
fn spectrum_of_a_geometric_table() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<f64> = (0..20).map(|i| 0.5f64.powi(i + 1)).collect();
    let table = write_json(dir.path(), "g.json", &values);
    let s = spectrum(&aakwfa(&["spectrum", "--oracle", table.to_str().unwrap(), "--kind", "table"]));
    assert_eq!(s.len(), 20);
    // rank one up to the dropped tail of size 2^-20
    assert!((s[0] - 2.0 / 3.0).abs() < 1e-5);
    assert!(s[1] < 1e-5);
}

#[test]
fn spectrum_of_the_zero_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = write_json(dir.path(), "z.json", &vec![0.0; 16]);
    let s = spectrum(&aakwfa(&["spectrum", "--oracle", table.to_str().unwrap(), "--kind", "table"]));
    assert!(s.iter().all(|v| *v == 0.0));
}

#[test]
fn spectrum_needs_n_past_the_table() {
    let (_dir, table) = setup();
    let output = aakwfa(&["spectrum", "--oracle", &table, "--kind", "table", "--n", "61"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn approximate_writes_every_output() {
    let (dir, table) = setup();
    let out = dir.path().join("run");
    let output = aakwfa(&[
        "approximate", "--oracle", &table, "--kind", "table", "--k", "1", "--n", "60", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.starts_with("sigma_k_n="));
    for f in ["wfa.json", "symbol.json", "aak.json", "report.json", "report.csv", "singular_values.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!((report["sigma_k_n"].as_f64().unwrap() - 0.1).abs() < 1e-6);
    let wfa: Wfa = serde_json::from_str(&std::fs::read_to_string(out.join("wfa.json")).unwrap()).unwrap();
    assert_eq!(wfa.states(), 1);
}

#[test]
fn format_selects_report_files() {
    let (dir, table) = setup();
    let out = dir.path().join("run");
    let output = aakwfa(&[
        "approximate", "--oracle", &table, "--kind", "table", "--k", "1", "--n", "20", "--format", "csv", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(out.join("report.csv").is_file());
    assert!(!out.join("report.json").exists());
}

#[test]
fn compare_an_automaton_with_itself() {
    let dir = tempfile::tempdir().unwrap();
    let wfa = aakwfa::fixtures::random_stable_wfa(3, 0.7, 9);
    let path = write_json(dir.path(), "w.json", &wfa);
    let p = path.to_str().unwrap();
    let output = aakwfa(&["compare", "--oracle", p, "--kind", "wfa", "--wfa", p]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let field = |name: &str| report[name].as_f64().unwrap();
    assert!(field("l2_distance") <= 1e-10);
    assert!(field("spectral_estimate") <= 1e-10);
}

#[test]
fn compare_against_the_extracted_automaton() {
    let (dir, table) = setup();
    let out = dir.path().join("run");
    let output = aakwfa(&[
        "approximate", "--oracle", &table, "--kind", "table", "--k", "1", "--n", "60", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let wfa = out.join("wfa.json");
    let output = aakwfa(&[
        "compare", "--oracle", &table, "--kind", "table", "--wfa", wfa.to_str().unwrap(), "--k", "1", "--n", "40",
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let field = |name: &str| report[name].as_f64().unwrap();
    assert!((field("spectral_estimate") - 0.1).abs() < 1e-4);
    assert!(field("l2_distance") <= field("spectral_estimate") + 1e-8);
    assert!(field("lower_bound") <= field("spectral_estimate") + 1e-12);
}
