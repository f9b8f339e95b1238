//! End-to-end checks of the abqed binary: exit codes, artifact schemas,
//! diagnostics, and bit-identical determinism.

use std::path::Path;
use std::process::{Command, Output};

fn abqed(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abqed"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn run_magnetic_preset_reports_expected_delta() {
    let tmp = tempfile::tempdir().unwrap();
    let out = abqed(
        &[
            "run",
            "--preset",
            "magnetic",
            "--units",
            "reduced",
            "--out",
            "artifacts",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("artifacts/summary.json")).unwrap(),
    )
    .unwrap();
    let delta = summary["delta_hamiltonian"].as_f64().unwrap();
    assert!((delta - 1.0).abs() < 1e-9, "delta = {delta}");
    let csv = std::fs::read_to_string(tmp.path().join("artifacts/phases.csv")).unwrap();
    assert!(csv.starts_with("# abqed phases v1\n"));
    assert!(csv.lines().count() >= 6); // header comment + columns + 4 rows
}

#[test]
fn run_with_flux_override() {
    let tmp = tempfile::tempdir().unwrap();
    let out = abqed(
        &[
            "run",
            "--preset",
            "magnetic",
            "--units",
            "reduced",
            "--flux",
            "2.5",
            "--out",
            "artifacts",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("artifacts/summary.json")).unwrap(),
    )
    .unwrap();
    let delta = summary["delta_hamiltonian"].as_f64().unwrap();
    assert!((delta - 2.5).abs() < 1e-9, "delta = {delta}");
}

#[test]
fn sweep_gauge_is_bit_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let out = abqed(
            &[
                "sweep-gauge",
                "--preset",
                "magnetic",
                "--units",
                "reduced",
                "--count",
                "6",
                "--seed",
                "13",
                "--out",
                dir,
            ],
            tmp.path(),
        );
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(tmp.path().join("a/sweep.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/sweep.csv")).unwrap();
    assert_eq!(a, b, "sweep CSV must be bit-identical for equal config + seed");
}

#[test]
fn malformed_config_fails_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("bad.toml"),
        "units = \"reduced\"\nnot_a_real_key = 1\n",
    )
    .unwrap();
    let out = abqed(&["run", "--config", "bad.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("not_a_real_key"),
        "diagnostic should name the bad key, got: {stderr}"
    );
}

#[test]
fn field_probe_emits_the_documented_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = abqed(
        &[
            "field-probe",
            "--preset",
            "magnetic",
            "--units",
            "reduced",
            "--probe",
            "0.2,0.0,0.0",
            "--out",
            "artifacts",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("artifacts/field_probe.csv")).unwrap();
    let mut lines = csv.lines();
    lines.next(); // version comment
    assert_eq!(lines.next().unwrap(), "x,y,z,t,V,Ax,Ay,Az,est_error");
}

#[test]
fn presets_command_lists_all_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = abqed(&["presets", "--units", "reduced", "--json"], tmp.path());
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("presets --json emits JSON");
    for name in ["magnetic", "electric", "electrodynamic"] {
        assert!(json.get(name).is_some(), "{name} missing from presets");
    }
}

#[test]
fn config_file_scenario_runs() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("run.toml"),
        r#"
units = "reduced"

[scenario]
preset = "electric"

[scenario.electric]
v_a = 0.4
v_b = 0.2
pulse_start = 30.0
pulse_duration = 10.0
edge_time = 2.0
cage_inner_radius = 0.02
cage_outer_radius = 0.04
cage_offset = 0.1
half_width = 0.1
approach_time = 20.0
dwell_margin = 4.0
charge = 1.0
mass = 1.0
"#,
    )
    .unwrap();
    let out = abqed(
        &["run", "--config", "run.toml", "--out", "artifacts"],
        tmp.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("artifacts/summary.json")).unwrap(),
    )
    .unwrap();
    let delta = summary["delta_hamiltonian"].as_f64().unwrap();
    // -q (V_a - V_b) T / hbar = -(0.2)(10)
    assert!((delta + 2.0).abs() < 1e-6, "delta = {delta}");
}
