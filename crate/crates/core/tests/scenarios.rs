use serde_json::Value;
use wpt_core::config::{parse_config, parse_config_str, ConfigError, GridAxis, RunConfig};
use wpt_core::experiments::{run_scenario, Fig2Variant, Scenario};

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.figure4.delta = GridAxis::linear(0.0, 1e6, 3);
    cfg.figure5.grid = GridAxis::linear(0.5, 2.5, 3);
    cfg.figure6.kappa0 = GridAxis::linear(1e3, 5e4, 3);
    cfg.figure6.gamma_sd = GridAxis::linear(1e3, 1e4, 2);
    cfg
}

fn names(out: &wpt_core::ScenarioOutput) -> Vec<String> {
    out.files.iter().map(|f| f.name.clone()).collect()
}

#[test]
fn every_scenario_writes_csv_and_sidecar() {
    let cfg = small_config();
    let cases = [
        (
            Scenario::Simulate,
            vec![
                "simulate_adiabatic.csv",
                "simulate_tqd.csv",
                "simulate.json",
            ],
        ),
        (
            Scenario::Figure2(Fig2Variant::C),
            vec!["fig2c.csv", "fig2c.json"],
        ),
        (
            Scenario::Figure4(None),
            vec!["fig4_200us.csv", "fig4_2us.csv", "fig4.json"],
        ),
        (
            Scenario::Figure4(Some(1e-5)),
            vec!["fig4_20us.csv", "fig4.json"],
        ),
        (Scenario::Figure5, vec!["fig5.csv", "fig5.json"]),
        (
            Scenario::Figure6(None),
            vec![
                "fig6_t0_1e-4.csv",
                "fig6_t0_1e-5.csv",
                "fig6_t0_1e-6.csv",
                "fig6.json",
            ],
        ),
        (Scenario::Sweep, vec!["sweep.csv", "sweep.json"]),
    ];
    let dir = tempfile::tempdir().unwrap();
    for (scenario, expected) in cases {
        let out = run_scenario(&scenario, &cfg).unwrap();
        assert_eq!(names(&out), expected, "{scenario:?}");
        assert!(out.max_audit < 1e-5, "{scenario:?}: {}", out.max_audit);
        out.write_to(dir.path()).unwrap();
        for f in &out.files {
            let on_disk = std::fs::read_to_string(dir.path().join(&f.name)).unwrap();
            assert_eq!(on_disk, f.contents);
            if f.name.ends_with(".csv") {
                let mut lines = on_disk.lines();
                let width = lines.next().unwrap().split(',').count();
                assert!(lines.all(|l| l.split(',').count() == width && !l.contains("nan")));
            } else {
                let v: Value = serde_json::from_str(&on_disk).unwrap();
                assert_eq!(v["provenance"]["config_hash"], cfg.hash());
                assert!(v["config"].is_object());
            }
        }
    }
}

#[test]
fn sweep_can_dump_trajectories() {
    let cfg = parse_config_str(
        r#"{"integrator": {"sample_count": 100},
            "sweep": {"axes": [{"param": "gamma_w", "min": 0, "max": 1e4, "count": 2}],
                      "protocols": ["tqd"], "outputs": ["eta", "trajectories"]}}"#,
        &[],
    )
    .unwrap();
    let out = run_scenario(&Scenario::Sweep, &cfg).unwrap();
    assert_eq!(
        names(&out),
        [
            "sweep.csv",
            "sweep_0000_tqd.csv",
            "sweep_0001_tqd.csv",
            "sweep.json"
        ]
    );
    assert!(out.files[0]
        .contents
        .starts_with("gamma_w [1/s],eta_tqd [-]\n"));
}

#[test]
fn distance_axis_sweep_uses_distance_model() {
    let cfg = parse_config_str(
        r#"{"integrator": {"sample_count": 100}, "coils": {"gamma_w": 1e4},
            "sweep": {"axes": [{"param": "d", "min": 0.5, "max": 2.5, "count": 3}], "outputs": ["eta"]}}"#,
        &[],
    )
    .unwrap();
    let r = wpt_core::run_sweep(&cfg.sweep, &cfg).unwrap();
    let eta = r.eta_of(wpt_core::Protocol::Adiabatic).unwrap();
    assert!(eta[0] > eta[2]);
}

#[test]
fn config_files_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"schedule": {"beta": 3e10, "t0": 1e-5}, "coils": {"gamma_w": 1e4}}"#,
    )
    .unwrap();
    let cfg = parse_config(Some(&path), &["t0=2e-5".into()]).unwrap();
    assert_eq!(cfg.schedule.beta, 3e10);
    assert_eq!(cfg.schedule.t0, 2e-5);
    assert_eq!(cfg.coils.gamma_w, 1e4);
    let again = parse_config_str(&cfg.emit(), &[]).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(again.hash(), cfg.hash());

    assert!(matches!(
        parse_config(Some(&dir.path().join("missing.json")), &[]),
        Err(ConfigError::Io { .. })
    ));
    std::fs::write(&path, r#"{"figure4": {"ratios": []}}"#).unwrap();
    assert_eq!(
        parse_config(Some(&path), &[]).unwrap_err(),
        ConfigError::Invalid {
            path: "figure4.ratios".into(),
            message: "must not be empty".into()
        }
    );
}
