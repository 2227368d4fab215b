mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::data_dir;

fn isolate(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isolate"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn s1(name: &str) -> String {
    data_dir().join("s1").join(name).display().to_string()
}

#[test]
fn run_then_replay_from_the_command_line() {
    let tmp = tempfile::tempdir().unwrap();
    let out = isolate(&["--config", &s1("config.json"), "--out", "o"], tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("gcc/tree-ssa-phiopt.c"), "{text}");
    let report = std::fs::read_to_string(tmp.path().join("o/report.txt")).unwrap();
    assert_eq!(report, text);
    let log = tmp.path().join("o/runlog.ndjson").display().to_string();
    let again = isolate(
        &["replay", "--config", &s1("config.json"), "--log", &log],
        tmp.path(),
    );
    assert!(
        again.status.success(),
        "{}",
        String::from_utf8_lossy(&again.stderr)
    );
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn replay_with_a_different_seed_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(
        isolate(&["--config", &s1("config.json"), "--out", "o"], tmp.path())
            .status
            .success()
    );
    let log = tmp.path().join("o/runlog.ndjson").display().to_string();
    let out = isolate(
        &[
            "replay",
            "--config",
            &s1("config.json"),
            "--log",
            &log,
            "--seed",
            "8",
        ],
        tmp.path(),
    );
    assert!(!out.status.success());
}

#[test]
fn setup_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = isolate(&["--config", "missing.json"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::write(
        tmp.path().join("bad.json"),
        r#"{"bug_id": "x", "nonsense": 1}"#,
    )
    .unwrap();
    let out = isolate(&["--config", "bad.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_prints_the_target() {
    let tmp = tempfile::tempdir().unwrap();
    let out = isolate(&["analyze", &s1("failing.c")], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("target:"), "{text}");
    assert_eq!(text.matches("target:").count(), 1);
}

#[test]
fn check_reports_shift_and_oracle_problems() {
    let tmp = tempfile::tempdir().unwrap();
    let shift = data_dir()
        .join("validation/ub/shift_1.c")
        .display()
        .to_string();
    let out = isolate(&["check", &shift], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.to_lowercase().contains("shift"), "{text}");

    let failing = std::fs::read_to_string(s1("failing.c")).unwrap();
    std::fs::write(
        tmp.path().join("dropped.c"),
        failing.replace("  printf(\"%d\\n\", a);\n", ""),
    )
    .unwrap();
    let out = isolate(
        &["check", "dropped.c", "--failing", &s1("failing.c")],
        tmp.path(),
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("oracle_invalid"), "{text}");
}

#[test]
fn prompts_lists_thirteen_rules() {
    let tmp = tempfile::tempdir().unwrap();
    let out = isolate(&["prompts", "--config", &s1("config.json")], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 13);
    for (i, l) in lines.iter().enumerate() {
        let mut parts = l.split_whitespace();
        assert_eq!(parts.next(), Some((i + 1).to_string().as_str()));
        assert_eq!(parts.next().map(str::len), Some(64));
    }
}
