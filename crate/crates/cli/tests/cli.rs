//! End-to-end checks of the `uot` binary: exit codes, preset dumps, solve
//! and diagnose flows.

use std::fs;
use std::path::Path;
use std::process::Command;

fn uot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uot"))
}

#[test]
fn preset_dump_prints_table_parameters() {
    let out = uot()
        .args(["preset", "--name", "exp1"])
        .output()
        .expect("run");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).expect("json dump");
    assert_eq!(json["n_t"], 15);
    assert_eq!(json["n_x"], 35);
    assert_eq!(json["iterations"], 200000);
    assert_eq!(json["tau1"], 1e-3);
    assert_eq!(json["tau2"], 1e-1);
    assert_eq!(json["alpha"], 100.0);
    assert_eq!(json["p"], 2);
}

#[test]
fn unknown_preset_exits_2() {
    let out = uot()
        .args(["preset", "--name", "exp99"])
        .output()
        .expect("run");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_tau1_exits_2_and_names_it() {
    let dir = std::env::temp_dir().join("uot-cli-badcfg");
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.json");
    fs::write(
        &cfg,
        r#"{
            "p": 2, "alpha": 100.0, "dims": 1, "n_t": 5, "n_x": 8,
            "mu0": {"kind": "uniform"}, "mu1": {"kind": "uniform"},
            "tau2": 0.1, "iterations": 10, "tolerance": 1e-6, "report_every": 5
        }"#,
    )
    .unwrap();
    let out = uot()
        .args(["solve", "--config", cfg.to_str().unwrap()])
        .output()
        .expect("run");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("tau1"), "stderr: {err}");
}

#[test]
fn solve_writes_outputs_and_diagnose_reads_them() {
    let dir = std::env::temp_dir().join("uot-cli-run");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("run.json");
    let out_dir = dir.join("out");
    fs::write(
        &cfg_path,
        format!(
            r#"{{
                "p": 2, "alpha": 100.0, "dims": 1, "n_t": 5, "n_x": 10,
                "mu0": {{"kind": "gaussian", "mean": [0.4], "variance": [0.02]}},
                "mu1": {{"kind": "gaussian", "mean": [0.6], "variance": [0.02]}},
                "tau1": 1e-3, "tau2": 1e-1, "iterations": 500, "tolerance": 1e-9,
                "report_every": 100, "out_dir": {:?}
            }}"#,
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = uot()
        .args(["solve", "--config", cfg_path.to_str().unwrap()])
        .output()
        .expect("run");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in [
        "mu_000.csv",
        "mu_004.csv",
        "phi_000.csv",
        "mx_000.csv",
        "f.csv",
        "reports.csv",
        "summary.json",
        "config.json",
    ] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    // shape contract: one row (1D), n_x columns for mu, n_x + 1 for mx
    let mu = fs::read_to_string(out_dir.join("mu_000.csv")).unwrap();
    assert_eq!(mu.lines().count(), 1);
    assert_eq!(mu.trim().split(',').count(), 10);
    let mx = fs::read_to_string(out_dir.join("mx_000.csv")).unwrap();
    assert_eq!(mx.trim().split(',').count(), 11);
    let f = fs::read_to_string(out_dir.join("f.csv")).unwrap();
    assert_eq!(f.lines().count(), 5);

    let out = uot()
        .args(["diagnose", "--run", out_dir.to_str().unwrap()])
        .output()
        .expect("run");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).expect("diagnose json");
    assert!(json["objective"].is_number());
    assert!(json["gap"].is_number());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn uw1_preset_writes_constant_source_file() {
    let dir = std::env::temp_dir().join("uot-cli-exp5");
    let _ = fs::remove_dir_all(&dir);
    // exp5 at a reduced grid so the test stays quick; the preset's physics
    // (1D, p = 1, unbalanced pair) is untouched
    let out = uot()
        .args(["preset", "--name", "exp5"])
        .output()
        .expect("dump");
    assert!(out.status.success());
    let mut json: serde_json::Value =
        serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    json["n_x"] = 24.into();
    json["iterations"] = 60000.into();
    json["out_dir"] = serde_json::Value::String(dir.to_str().unwrap().into());
    // the resolved dump fixes tau to the n_x = 35 default; recompute for 24
    let step = 1.0 / 24.0 / 8f64.sqrt();
    json["tau1"] = step.into();
    json["tau2"] = step.into();
    let cfg_path = std::env::temp_dir().join("uot-cli-exp5.json");
    fs::write(&cfg_path, serde_json::to_string(&json).unwrap()).unwrap();
    let out = uot()
        .args(["solve", "--config", cfg_path.to_str().unwrap()])
        .output()
        .expect("run");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // the time-integrated problem has a constant source: a single value,
    // equal to the mass imbalance M1 - M0 = 1 - 2 = -1
    let f = fs::read_to_string(dir.join("f.csv")).unwrap();
    let lines: Vec<&str> = f.lines().collect();
    assert_eq!(lines.len(), 1);
    let value: f64 = lines[0].parse().unwrap();
    assert!((value + 1.0).abs() < 1e-9, "source constant {value}");
    assert!(dir.join("mx_000.csv").exists());
    let _ = fs::remove_dir_all(&dir);
    let _ = fs::remove_file(&cfg_path);
}

#[test]
fn numerical_divergence_exits_3() {
    let dir = std::env::temp_dir().join("uot-cli-diverge");
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("diverge.json");
    // steps far beyond the stability bound blow the iteration up fast
    fs::write(
        &cfg,
        format!(
            r#"{{
                "p": 2, "alpha": 100.0, "dims": 1, "n_t": 6, "n_x": 16,
                "mu0": {{"kind": "gaussian", "mean": [0.4], "variance": [0.02]}},
                "mu1": {{"kind": "gaussian", "mean": [0.6], "variance": [0.02]}},
                "tau1": 1e6, "tau2": 1e6, "iterations": 5000, "tolerance": 1e-9,
                "report_every": 1000, "out_dir": {:?}
            }}"#,
            dir.join("out").to_str().unwrap()
        ),
    )
    .unwrap();
    let out = uot()
        .args(["solve", "--config", cfg.to_str().unwrap()])
        .output()
        .expect("run");
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("diverged"), "stderr: {err}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn image_densities_drive_a_2d_run() {
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets/densities");
    let dir = std::env::temp_dir().join("uot-cli-image-run");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("img.json");
    fs::write(
        &cfg,
        format!(
            r#"{{
                "p": 2, "alpha": 100.0, "dims": 2, "n_t": 4, "n_x": 12, "n_y": 12,
                "mu0": {{"kind": "image", "path": {:?}}},
                "mu1": {{"kind": "image", "path": {:?}}},
                "tau1": 1e-3, "tau2": 1e-1, "iterations": 300, "tolerance": 1e-9,
                "report_every": 100, "out_dir": {:?}
            }}"#,
            assets.join("blob_a.pgm").to_str().unwrap(),
            assets.join("blob_b.pgm").to_str().unwrap(),
            dir.join("out").to_str().unwrap()
        ),
    )
    .unwrap();
    let out = uot()
        .args(["solve", "--config", cfg.to_str().unwrap()])
        .output()
        .expect("run");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("out").join("my_000.csv").exists(), "2D runs emit y-flux files");
    let _ = fs::remove_dir_all(&dir);
}

fn exp4_asset_exists() -> bool {
    Path::new("../../assets/densities/blob_a.pgm").exists()
}

#[test]
fn exp4_preset_resolves_when_assets_present() {
    // the exp4 preset references the repo's sample images by relative path
    if !exp4_asset_exists() {
        return;
    }
    let out = uot()
        .current_dir("../..")
        .args(["preset", "--name", "exp4"])
        .output()
        .expect("run");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("blob_a.pgm"));
}
