//! End-to-end runs of the command-line entry point.

use std::fs;
use std::path::Path;

use cavspin::io::main_with_args;
use serde_json::Value;

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn run_cli(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> i32 {
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![
        "cavspin".to_string(),
        sub.to_string(),
        "--config".into(),
        path.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    main_with_args(args)
}

const PARAMS: &str = "g_coll_hz = 150e3\nkappa_hz = 660e3\ndelta_hz = 22e6\n";

#[test]
fn params_reports_derived_rates() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_cli(dir.path(), "params", PARAMS, &[]), 0);
    let r = report(&dir.path().join("out"));
    assert_eq!(r["status"], "ok");
    assert_eq!(r["experiment"], "params");
    let chi_n = r["derived_rates"]["chi_n"].as_f64().unwrap();
    assert!((chi_n - 1022.497).abs() < 1e-2, "{chi_n}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_cli(dir.path(), "params", &format!("{PARAMS}detunning_hz = 1.0\n"), &[]);
    assert_eq!(code, 2);
    let r = report(&dir.path().join("out"));
    assert_eq!(r["status"], "failed");
    assert_eq!(r["error"]["kind"], "config");
    assert!(r["error"]["message"].as_str().unwrap().contains("detunning_hz"));
}

#[test]
fn zero_linewidth_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_cli(dir.path(), "params", "g_coll_hz = 150e3\nkappa_hz = 0.0\n", &[]);
    assert_eq!(code, 2);
    assert_eq!(report(&dir.path().join("out"))["status"], "failed");
}

#[test]
fn missing_config_flag_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let code = main_with_args(["cavspin", "params", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(report(&out)["error"]["kind"], "config");
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(main_with_args(["cavspin", "--help"]), 0);
    assert_eq!(main_with_args(["cavspin"]), 2);
    assert_eq!(main_with_args(["cavspin", "teleport"]), 2);
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_cli(dir.path(), "params", PARAMS, &["--seed", "42"]), 0);
    assert_eq!(report(&dir.path().join("out"))["seed"], 42);
}

#[test]
fn superradiance_writes_trace_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let config = "g_coll_hz = 150e3\nkappa_hz = 660e3\ntheta = 2.0\n";
    assert_eq!(run_cli(dir.path(), "superradiance", config, &[]), 0);
    let out = dir.path().join("out");
    let table = cavspin::io::read_table(&out.join("superradiance.csv")).unwrap();
    let names: Vec<&str> = table.columns.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["t", "intensity", "intensity_normalized", "s_z"]);
    assert!(table.n_rows() > 100);
    assert_eq!(report(&out)["tables"][0], "superradiance.csv");
}

#[test]
fn sweep_needs_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = "g_coll_hz = 150e3\nkappa_hz = 660e3\nsweep_experiment = \"superradiance\"\nsweep_over = \"theta\"\nvalues = []\n";
    assert_eq!(run_cli(dir.path(), "sweep", config, &[]), 2);
}

#[test]
fn output_dir_from_config_is_used_without_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_config");
    let path = dir.path().join("run.toml");
    fs::write(&path, format!("{PARAMS}output_dir = \"{}\"\n", out.display())).unwrap();
    assert_eq!(main_with_args(["cavspin", "params", "--config", path.to_str().unwrap()]), 0);
    assert_eq!(report(&out)["status"], "ok");
}
