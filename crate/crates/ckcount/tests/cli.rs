//! The binary's exit codes and output shape.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckcount"))
        .args(args)
        .env_remove("CKCOUNT_THREADS")
        .output()
        .unwrap()
}

#[test]
fn count_reports_the_exact_count() {
    let out = run(&["count", "--q", "3", "--x4", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("\"count\":15"), "{text}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["count", "--q", "3"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["count", "--q", "2", "--x4", "1"]).status.code(), Some(2));
}

#[test]
fn csv_output_carries_a_header() {
    let out = run(&["--format", "csv", "scan", "--q", "3", "--x4-min", "1", "--x4-max", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# schema: 1"), "{text}");
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 6, "{text}"); // column names plus five rows
}

#[test]
fn out_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let out = run(&["--out", path.to_str().unwrap(), "count", "--q", "4", "--x", "1.5"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert!(v.is_object());
}
