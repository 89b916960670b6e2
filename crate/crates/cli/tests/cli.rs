//! End-to-end checks of the compiled binary: output shapes, JSON mode, and
//! the exit-code contract (0 ok, 1 validation, 2 numerical, 3 selftest,
//! 10/11/12 classification cases).

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_r0lab"))
}

fn model_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = bin().args(args).output().expect("binary runs");
    Run {
        code: out.status.code().expect("terminated by signal"),
        stdout: String::from_utf8(out.stdout).expect("utf8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf8 stderr"),
    }
}

fn run_model(cmd: &str, name: &str, extra: &[&str]) -> Run {
    let path = model_path(name);
    let mut args = vec![cmd, "--model", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

/// Writes a scratch model file; callers clean up via the returned guard.
struct TempModel(PathBuf);

impl TempModel {
    fn new(tag: &str, contents: &str) -> Self {
        let path = std::env::temp_dir().join(format!("r0lab-cli-test-{}-{tag}.json", std::process::id()));
        std::fs::write(&path, contents).expect("temp model written");
        TempModel(path)
    }

    fn as_str(&self) -> &str {
        self.0.to_str().unwrap()
    }
}

impl Drop for TempModel {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

#[test]
fn r0_reports_the_worked_value() {
    let out = run_model("r0", "worked_2x2.json", &[]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    assert!(out.stdout.contains("R0 = 1.5"), "stdout: {}", out.stdout);
    assert!(out.stdout.contains("r(T) = 0"), "stdout: {}", out.stdout);
}

#[test]
fn r0_json_round_trips() {
    let out = run_model("r0", "worked_2x2.json", &["--json"]);
    assert_eq!(out.code, 0);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).expect("valid json");
    assert!((v["r0"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    assert!(v["method"].is_string());
}

#[test]
fn classify_exit_codes_encode_the_case() {
    let sup = run_model("classify", "worked_2x2.json", &[]);
    assert_eq!(sup.code, 10, "stderr: {}", sup.stderr);
    assert!(sup.stdout.contains("case a (supercritical)"));

    let sub = run_model("classify", "subcritical_2x2.json", &[]);
    assert_eq!(sub.code, 12);
    assert!(sub.stdout.contains("case c (subcritical)"));

    let quiet = run_model("classify", "subcritical_2x2.json", &["--no-case-exit"]);
    assert_eq!(quiet.code, 0);
}

#[test]
fn classify_reports_the_critical_case() {
    // Fertility scaled by 2/3 pins both R0 and r(A) to 1.
    let c = 2.0 / 3.0;
    let model = TempModel::new(
        "critical",
        &format!(
            r#"{{"kind":"split","T":[[0.0,0.0],[0.5,0.0]],"F":[[{c},{c}],[0.0,0.0]]}}"#
        ),
    );
    let out = run(&["classify", "--model", model.as_str()]);
    assert_eq!(out.code, 11, "stdout: {} stderr: {}", out.stdout, out.stderr);
    assert!(out.stdout.contains("case b (critical)"));
    assert!(out.stderr.contains("warning"), "expected near-boundary warning");
}

#[test]
fn classify_strict_certifies_the_worked_fixture() {
    let out = run_model("classify", "worked_2x2.json", &["--strict"]);
    assert_eq!(out.code, 10);
    assert!(out.stdout.contains("strict inequalities certified"), "stdout: {}", out.stdout);
}

#[test]
fn classify_strict_names_blockers_on_reducible_input() {
    let model = TempModel::new(
        "reducible",
        r#"{"kind":"split","T":[[0.5,0.0],[0.0,0.5]],"F":[[1.0,0.0],[0.0,0.1]]}"#,
    );
    let out = run(&["classify", "--model", model.as_str(), "--strict"]);
    assert_eq!(out.code, 10);
    assert!(out.stdout.contains("not applicable"), "stdout: {}", out.stdout);
    assert!(out.stdout.contains("reducible"), "stdout: {}", out.stdout);
}

#[test]
fn curve_emits_tsv_with_an_audit_on_stderr() {
    let out = run_model("curve", "worked_2x2.json", &["--samples", "5"]);
    assert_eq!(out.code, 0);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], "lambda\tradius");
    assert!(lines[1].starts_with("1\t1.5"));
    assert!(out.stderr.contains("curve audit: monotone ok, convex ok"));
}

#[test]
fn curve_rejects_ranges_inside_the_transition_spectrum() {
    let out = run_model("curve", "worked_2x2.json", &["--lambda-min", "0.0"]);
    assert_eq!(out.code, 1, "stderr: {}", out.stderr);
}

#[test]
fn leslie_prints_the_truncation_table() {
    let out = run_model("leslie", "leslie_geometric.json", &[]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("R0 (closed form) = 0.666666667"), "stdout: {}", out.stdout);
    for n in ["2", "4", "8", "16"] {
        assert!(
            out.stdout.lines().any(|l| l.trim_start().starts_with(n)),
            "missing row for n = {n}: {}",
            out.stdout
        );
    }
}

#[test]
fn leslie_finite_support_matches_the_direct_sum() {
    let out = run_model("leslie", "leslie_finite.json", &["--truncate", "2,3"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("R0 (closed form) = 1.5"), "stdout: {}", out.stdout);
}

#[test]
fn leslie_rejects_split_models() {
    let out = run_model("leslie", "worked_2x2.json", &[]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("leslie"), "stderr: {}", out.stderr);
}

#[test]
fn simulate_tracks_the_dominant_eigenvalue() {
    let out = run_model("simulate", "worked_2x2.json", &["--steps", "400"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("growth factor = 1.3660254"), "stdout: {}", out.stdout);
    assert!(out.stdout.contains("absorbed: false"));
}

#[test]
fn simulate_validates_the_initial_state() {
    let wrong_len = run_model("simulate", "worked_2x2.json", &["--x0", "1,2,3"]);
    assert_eq!(wrong_len.code, 1);
    let zero = run_model("simulate", "worked_2x2.json", &["--x0", "0,0"]);
    assert_eq!(zero.code, 1);
}

#[test]
fn selftest_small_run_passes() {
    let out = run(&["selftest", "--count", "9", "--seed", "3"]);
    assert_eq!(out.code, 0, "stdout: {}", out.stdout);
    assert!(out.stdout.contains("all invariants passed"));
}

#[test]
fn selftest_json_reports_every_check() {
    let out = run(&["selftest", "--count", "3", "--seed", "5", "--json"]);
    assert_eq!(out.code, 0);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).expect("valid json");
    assert_eq!(v["all_passed"], serde_json::Value::Bool(true));
    assert!(v["checks"].as_array().unwrap().len() >= 15);
}

#[test]
fn malformed_model_files_exit_one() {
    let garbage = TempModel::new("garbage", "not json at all");
    let out = run(&["r0", "--model", garbage.as_str()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("invalid model file"));

    let negative = TempModel::new(
        "negative",
        r#"{"kind":"split","T":[[0.0,0.0],[0.5,0.0]],"F":[[-1.0,1.0],[0.0,0.0]]}"#,
    );
    let out = run(&["r0", "--model", negative.as_str()]);
    assert_eq!(out.code, 1, "stderr: {}", out.stderr);

    let missing = run(&["r0", "--model", "/nonexistent/nope.json"]);
    assert_eq!(missing.code, 1);
    assert!(missing.stderr.contains("cannot read"));
}

#[test]
fn unsupported_schema_version_is_rejected() {
    let future = TempModel::new(
        "future",
        r#"{"schema_version":"2","kind":"split","T":[[0.0]],"F":[[1.0]]}"#,
    );
    let out = run(&["r0", "--model", future.as_str()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("schema_version"));
}

#[test]
fn transition_radius_at_or_above_one_is_rejected() {
    let explosive = TempModel::new(
        "explosive",
        r#"{"kind":"split","T":[[1.0]],"F":[[0.5]]}"#,
    );
    let out = run(&["r0", "--model", explosive.as_str()]);
    assert_eq!(out.code, 1, "stderr: {}", out.stderr);
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let bogus = run(&["bogus-subcommand"]);
    assert_eq!(bogus.code, 1);

    let help = run(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("r0lab"));
}
