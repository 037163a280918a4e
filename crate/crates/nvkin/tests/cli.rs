//! Black-box tests of the nvkin binary: determinism, exit codes, config
//! resolution, and the spectrum -> fit pipeline.

use std::path::Path;
use std::process::{Command, Output};

fn nvkin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nvkin"))
}

fn write_cfg(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn resonances_deterministic_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), r#"{"theta_grid_deg": [0.0, 5.0, 20.0, 54.7, 80.0]}"#);
    let run = |jobs: &str| {
        let out = nvkin()
            .args(["resonances", "--jobs", jobs, "--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        out.stdout
    };
    let a = run("1");
    let b = run("1");
    let c = run("3");
    assert!(!a.is_empty());
    assert_eq!(a, b, "reruns must be byte-identical");
    assert_eq!(a, c, "worker count must not affect output");
}

#[test]
fn unparseable_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "{ not json");
    let out = nvkin().args(["resonances", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 2);

    // Validation failures are config errors too.
    let cfg = write_cfg(dir.path(), r#"{"mw_frequency": -5.0}"#);
    let out = nvkin().args(["resonances", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn empty_window_exits_3_with_header() {
    // All resonances lie above 0.1 T at 9.43 GHz.
    let out = nvkin()
        .args(["resonances", "--window", "0.05", "0.1"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "theta_deg,transition,field_T,coupling\n"
    );
}

#[test]
fn fit_empty_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = nvkin().arg("fit").arg(&empty).output().unwrap();
    assert_eq!(code(&out), 2);

    let bogus = dir.path().join("bogus.csv");
    std::fs::write(&bogus, "field,signal\n1,2\nnot a row\n").unwrap();
    let out = nvkin().arg("fit").arg(&bogus).output().unwrap();
    assert_eq!(code(&out), 2);

    let missing = dir.path().join("missing.csv");
    let out = nvkin().arg("fit").arg(&missing).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn env_var_supplies_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), r#"{"theta_grid_deg": [0.0]}"#);
    let out = nvkin()
        .arg("resonances")
        .env("NVKIN_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    // One angle, two allowed transitions at theta = 0.
    assert_eq!(text.lines().count(), 3);

    // A broken env-supplied config is a parse failure.
    let out = nvkin()
        .arg("resonances")
        .env("NVKIN_CONFIG", dir.path().join("nope.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn spectrum_fit_pipeline_through_binary() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.csv");

    // Differential spectrum of the 2-3 triplet at theta = 0.
    let out = nvkin()
        .args([
            "spectrum",
            "--differential",
            "--theta",
            "0",
            "--window",
            "0.2340",
            "0.2347",
            "--points",
            "4000",
            "--output",
        ])
        .arg(&spec_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&spec_path).unwrap();
    assert!(text.starts_with("field_T,signal\n"));
    assert_eq!(text.lines().count(), 4001);

    // Fit it back: integrate, triplet model, equal amplitudes.
    let out = nvkin()
        .args(["fit"])
        .arg(&spec_path)
        .args(["--differential", "--triplet"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["converged"], serde_json::Value::Bool(true));
    let peaks = report["peaks"].as_array().unwrap();
    assert_eq!(peaks.len(), 1);
    let center = peaks[0]["center_T"].as_f64().unwrap();
    assert!((center - 0.2343485).abs() < 5e-6, "center {center}");
    let spacing = report["hyperfine_spacing_T"].as_f64().unwrap();
    assert!((spacing - 0.077e-3).abs() < 0.002e-3, "spacing {spacing}");
}

#[test]
fn spectrum_no_roots_exits_3() {
    let out = nvkin()
        .args(["spectrum", "--theta", "0", "--window", "0.05", "0.1"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "field_T,signal\n");
}

#[test]
fn geometry_output_shape() {
    let out = nvkin().args(["geometry", "--step-deg", "30"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rotation_deg,theta1_deg,theta2_deg,theta3_deg,theta4_deg"
    );
    assert_eq!(lines.count(), 13);
}

#[test]
fn flag_overrides_beat_config_file() {
    let dir = tempfile::tempdir().unwrap();
    // Config restricts the window so no roots exist; the flag restores it.
    let cfg = write_cfg(
        dir.path(),
        r#"{"theta_grid_deg": [0.0], "field_window": [0.05, 0.1]}"#,
    );
    let out = nvkin()
        .args(["resonances", "--window", "0.05", "0.7", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().lines().count() > 1);
}
