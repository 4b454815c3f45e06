use std::fs;

use gwcp_cli::config::{Command, Format};
use gwcp_cli::{parse_config, run, CliError};

fn dist_file(dir: &tempfile::TempDir, body: &str) -> String {
    let path = dir.path().join("d.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_capture(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("gwcp").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn bounds_config_from_valid_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dist_file(&dir, r#"{"type":"explicit","p":{"4":0.5,"6":0.5}}"#);
    let cfg = parse_config(["gwcp", "bounds", "--dist", &d]).unwrap();
    assert!(matches!(cfg.command, Command::Bounds(_)));
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.format, Format::Json);
    assert!(cfg.dist.is_some());
}

#[test]
fn missing_dist_is_a_usage_error() {
    let err = parse_config(["gwcp", "bounds"]).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let (code, _, stderr) = run_capture(&["bounds"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("--dist"));
}

#[test]
fn unknown_format_lists_allowed_values() {
    let (code, _, stderr) = run_capture(&["--format", "yaml", "paper-table"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("json") && stderr.contains("csv"), "{stderr}");
}

#[test]
fn unknown_flags_are_rejected() {
    let (code, _, _) = run_capture(&["paper-table", "--bogus"]);
    assert_eq!(code, 2);
}

#[test]
fn missing_file_is_an_io_error() {
    let err = parse_config(["gwcp", "bounds", "--dist", "/nonexistent/d.json"]).unwrap_err();
    assert!(matches!(err, CliError::Io { .. }));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn invalid_tree_law_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dist_file(&dir, r#"{"type":"geometric","mean":1.5}"#);
    let (code, _, stderr) = run_capture(&["bounds", "--dist", &d]);
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn bracket_needs_two_values() {
    let dir = tempfile::tempdir().unwrap();
    let d = dist_file(&dir, r#"{"type":"degenerate","d":4}"#);
    let err = parse_config([
        "gwcp",
        "estimate-critical",
        "--process",
        "cp",
        "--mode",
        "global",
        "--dist",
        &d,
        "--bracket",
        "1.0",
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn json_report_has_meta_and_result() {
    let (code, stdout, _) =
        run_capture(&["--seed", "7", "certify", "--h-min", "4", "--nu", "0.3", "--r", "0.437", "--b", "0.256"]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["meta"]["tool"], "gwcp");
    assert_eq!(doc["meta"]["seed"], 7);
    assert_eq!(doc["meta"]["config"]["command"]["name"], "certify");
    assert_eq!(doc["result"]["passed"], true);
    assert!(!stdout.contains("elapsed") && !stdout.contains("time_ms"));
}

#[test]
fn csv_report_starts_with_meta_line() {
    let (code, stdout, _) = run_capture(&["--format", "csv", "spectral-radius", "--h-min", "4", "--n-max", "100"]);
    assert_eq!(code, 0);
    let mut lines = stdout.lines();
    assert!(lines.next().unwrap().starts_with("# meta {"));
    assert_eq!(lines.next().unwrap(), "n,return_probability,root");
    assert_eq!(lines.next().unwrap(), "0,1.0,");
    assert_eq!(lines.next().unwrap(), "1,0.0,");
    assert_eq!(lines.count(), 99);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let (code, stdout, _) = run_capture(&["paper-table", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + 1 + 9);
    assert!(text.lines().nth(2).unwrap().starts_with("4,1.25,1.6666666666666667,"));
}

#[test]
fn unwritable_out_is_an_io_error() {
    let (code, _, _) = run_capture(&["paper-table", "--out", "/nonexistent/dir/t.json"]);
    assert_eq!(code, 3);
}

#[test]
fn same_seed_same_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dist_file(&dir, r#"{"type":"degenerate","d":4}"#);
    let args = ["--seed", "11", "simulate", "cp", "--dist", &d, "--lambda", "1.5", "--t-max", "5", "--trials", "50"];
    let (c1, a, _) = run_capture(&args);
    let (c2, b, _) = run_capture(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
}

#[test]
fn non_separating_bracket_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dist_file(&dir, r#"{"type":"degenerate","d":4}"#);
    let (code, _, stderr) = run_capture(&[
        "estimate-critical",
        "--process",
        "cp",
        "--mode",
        "global",
        "--dist",
        &d,
        "--bracket",
        "1.2,1.2",
        "--trials",
        "20",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("does not separate"));
}
