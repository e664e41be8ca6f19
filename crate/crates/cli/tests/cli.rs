use std::path::Path;
use std::process::{Command, Output};

fn wpt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpt"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = wpt(dir.path(), &["figure9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(listing(dir.path()).is_empty());
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = wpt(dir.path(), &["simulate", "--override", "schedule.t0=-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schedule.t0"));
    let out = wpt(dir.path(), &["figure2", "e"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn figure2_writes_only_into_the_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = wpt(
        dir.path(),
        &["figure2", "a", "--out", "results", "--fixed-step"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(listing(dir.path()), ["results"]);
    assert_eq!(
        listing(&dir.path().join("results")),
        ["fig2a.csv", "fig2a.json"]
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("fig2a: adiabatic"));

    let first = std::fs::read(dir.path().join("results/fig2a.csv")).unwrap();
    let again = wpt(
        dir.path(),
        &["figure2", "a", "--out", "results", "--fixed-step"],
    );
    assert!(again.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("results/fig2a.csv")).unwrap(),
        first
    );
}

#[test]
fn overrides_reach_the_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"schedule": {"beta": 1e9}, "integrator": {"sample_count": 300}}"#,
    )
    .unwrap();
    let out = wpt(
        dir.path(),
        &[
            "simulate",
            "--config",
            "run.json",
            "--override",
            "beta=3e10",
            "--override",
            "t0=1e-5",
            "--out",
            "o",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let side = std::fs::read_to_string(dir.path().join("o/simulate.json")).unwrap();
    assert!(side.contains("\"beta\": 30000000000.0"), "{side}");
    assert!(side.contains("\"sample_count\": 300"));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = wpt(dir.path(), &["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count() >= 5);
    assert!(listing(dir.path()).is_empty());
}

#[test]
fn config_subcommand_prints_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = wpt(
        dir.path(),
        &["config", "--phi-dot-mode", "verbatim", "--threads", "2"],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"phi_dot_mode\": \"verbatim\""));
    assert!(stdout.contains("\"threads\": 2"));
}
