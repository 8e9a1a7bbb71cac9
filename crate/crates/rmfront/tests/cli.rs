//! End-to-end checks of the installed binary: exit codes, file contracts,
//! and rerun determinism.

use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CSV_HEADER: &str = "alpha,eta,delta,epsilon,c,sigma,bound,radius,winding,status,seconds";

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rmfront")
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rmfront-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(dir: &Path, name: &str) -> Value {
    let text = fs::read_to_string(dir.join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// The seconds column is wall-clock noise; everything before it must be
/// byte-identical between reruns.
fn strip_seconds(csv: &str) -> String {
    csv.lines()
        .map(|line| match line.rfind(',') {
            Some(i) => &line[..i],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn config_file_merges_under_flags() {
    let dir = workdir("config-merge");
    let cfg = dir.join("run.toml");
    fs::write(&cfg, "alpha = 0.6\neta = 2.5\ndelta = 0.1\nc = 1.5\n").unwrap();
    let out = run(&[
        "front",
        "--config",
        cfg.to_str().unwrap(),
        "--alpha",
        "0.7",
        "--epsilon-zero",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = read_json(&dir, "front_summary.json");
    assert_eq!(summary["params"]["alpha"].as_f64(), Some(0.7));
    assert_eq!(summary["params"]["eta"].as_f64(), Some(2.5));
    assert_eq!(summary["params"]["c"].as_f64(), Some(1.5));
    assert_eq!(summary["params"]["epsilon"].as_f64(), Some(0.0));
    assert_eq!(summary["regime"].as_str(), Some("three"));
    assert!(dir.join("front_profile.txt").exists());
}

#[test]
fn structural_problems_exit_with_two() {
    let dir = workdir("exit-two");
    let out_dir = dir.to_str().unwrap();

    let bad_alpha = run(&["front", "--alpha", "1.4", "--out", out_dir]);
    assert_eq!(bad_alpha.status.code(), Some(2));
    assert!(stderr(&bad_alpha).contains("alpha"));

    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "alpha = 0.5\nnot_a_key = 1\n").unwrap();
    let unknown_key = run(&["front", "--config", cfg.to_str().unwrap(), "--out", out_dir]);
    assert_eq!(unknown_key.status.code(), Some(2));
    assert!(stderr(&unknown_key).contains("not_a_key"));

    let zero_count = run(&["sweep", "--eta-count", "0", "--out", out_dir]);
    assert_eq!(zero_count.status.code(), Some(2));

    let subcritical = run(&[
        "front", "--alpha", "0.1", "--eta", "2", "--c", "1", "--out", out_dir,
    ]);
    assert_eq!(subcritical.status.code(), Some(2));
    assert!(stderr(&subcritical).contains("speed"));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = workdir("exit-three");
    let out = run(&[
        "front",
        "--epsilon-zero",
        "--half-length",
        "60",
        "--nodes",
        "401",
        "--tol",
        "1e-30",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn selftest_passes_every_builtin_check() {
    let dir = workdir("selftest");
    let out = run(&["selftest", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let passes = text
        .lines()
        .filter(|l| l.starts_with("selftest ") && l.ends_with(": pass"))
        .count();
    assert_eq!(passes, 6, "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn sweep_csv_contract_and_rerun_determinism() {
    let base_args = [
        "sweep",
        "--eta-lo",
        "3",
        "--eta-hi",
        "3",
        "--eta-count",
        "1",
        "--alpha-lo",
        "0.45",
        "--alpha-hi",
        "0.8",
        "--alpha-count",
        "2",
        "--c-lo",
        "1.5",
        "--c-hi",
        "1.5",
        "--c-count",
        "1",
    ];
    let dir_a = workdir("sweep-a");
    let dir_b = workdir("sweep-b");
    let mut args_a: Vec<&str> = base_args.to_vec();
    args_a.extend_from_slice(&["--out", dir_a.to_str().unwrap()]);
    let mut args_b: Vec<&str> = base_args.to_vec();
    args_b.extend_from_slice(&["--out", dir_b.to_str().unwrap(), "--jobs", "2"]);
    let out_a = run(&args_a);
    let out_b = run(&args_b);
    assert_eq!(out_a.status.code(), Some(0), "{}", stderr(&out_a));
    assert_eq!(out_b.status.code(), Some(0), "{}", stderr(&out_b));

    let csv_a = fs::read_to_string(dir_a.join("sweep.csv")).unwrap();
    let csv_b = fs::read_to_string(dir_b.join("sweep.csv")).unwrap();
    assert_eq!(csv_a.lines().next(), Some(CSV_HEADER));
    assert_eq!(csv_a.lines().count(), 3);
    assert_eq!(strip_seconds(&csv_a), strip_seconds(&csv_b));

    for line in csv_a.lines().skip(1) {
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
        assert!(line.contains(",ok,"), "{line}");
    }
    let summary = read_json(&dir_a, "sweep_summary.json");
    assert_eq!(summary["n_cases"].as_u64(), Some(2));
    assert_eq!(summary["by_status"]["ok"].as_u64(), Some(2));
}

#[test]
fn sweep_keeps_going_past_a_failed_case() {
    let dir = workdir("sweep-mixed");
    let out = run(&[
        "sweep",
        "--eta-lo",
        "2",
        "--eta-hi",
        "2",
        "--eta-count",
        "1",
        "--alpha-lo",
        "0.1",
        "--alpha-hi",
        "0.45",
        "--alpha-count",
        "2",
        "--c-lo",
        "1",
        "--c-hi",
        "1",
        "--c-count",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let statuses: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(9).unwrap())
        .collect();
    assert!(statuses.contains(&"front-failure"), "{csv}");
    assert!(statuses.contains(&"ok"), "{csv}");
}

#[test]
fn kpp_comparison_agrees_in_the_reduced_regime() {
    let dir = workdir("kpp-compare");
    let out = run(&[
        "kpp-compare",
        "--alpha",
        "0.75",
        "--eta",
        "3",
        "--delta",
        "0.1",
        "--epsilon-zero",
        "--c",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = read_json(&dir, "kpp_compare.json");
    assert_eq!(report["report"]["comparable"].as_bool(), Some(true));
    assert_eq!(report["report"]["winding_full"].as_i64(), Some(0));
    assert_eq!(report["report"]["winding_kpp"].as_i64(), Some(0));
    assert_eq!(report["report"]["equal"].as_bool(), Some(true));
}

#[test]
fn spectrum_reports_missing_oscillatory_branches() {
    let dir = workdir("spectrum-degenerate");
    let out = run(&[
        "spectrum",
        "--alpha",
        "0.75",
        "--eta",
        "3",
        "--delta",
        "3",
        "--epsilon",
        "0.01",
        "--c",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = read_json(&dir, "spectrum.json");
    assert_eq!(summary["lemma3_present"].as_bool(), Some(false));
    assert!(summary["k1"].is_null());
    assert!(summary["k2"].is_null());
}
