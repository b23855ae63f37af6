use std::path::Path;
use std::process::Command;

use serde::Deserialize;
use tomostitch::io::{read_csv, read_image, read_sinogram};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tomostitch"))
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("small.toml");
    std::fs::write(
        &p,
        "seed = 5\n[phantom]\ndiameter = 128\n[scan]\nfov = 64\n[register]\ntrials = 2\n",
    )
    .unwrap();
    p
}

#[test]
fn missing_config_exits_2_with_record() {
    let out = bin()
        .args(["--config", "/nonexistent/recipe.toml", "sweep"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    let rec: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(rec["error"], "config");
    assert_eq!(rec["path"], "/nonexistent/recipe.toml");
}

#[test]
fn invalid_override_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "--out",
            dir.path().join("o").to_str().unwrap(),
            "sweep",
            "--truncation-grid",
            "0.2,1.5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[derive(Deserialize)]
struct ReconRow {
    strategy: String,
    ssim: f64,
    reassembly_error: Option<f64>,
}

#[test]
fn reconstruct_soa_noise_off_matches_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let status = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .args(["reconstruct", "--strategy", "soa", "--noise", "off"])
        .status()
        .unwrap();
    assert!(status.success());
    let rows: Vec<ReconRow> = read_csv(out.join("reconstruct.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r.strategy, "soa");
        assert!(r.ssim >= 0.99, "{}", r.ssim);
        assert!(r.reassembly_error.unwrap() <= 1e-10);
    }
    let reference = read_image(out.join("recon_reference.mtr")).unwrap();
    assert_eq!((reference.width(), reference.height()), (128, 128));
}

#[test]
fn manifest_records_artifacts_and_env_sets_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("from_env");
    let status = bin()
        .env("TOMOSTITCH_OUT", &out)
        .args(["--config", cfg.to_str().unwrap(), "--seed", "11", "phantom"])
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "phantom");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config"]["phantom"]["diameter"], 128);
    let names: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["path"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"phantom.mtr") && names.contains(&"sinogram_full.json"));
    let (sino, meta) = read_sinogram(out.join("sinogram_full.mtr")).unwrap();
    assert_eq!(sino.n_angles(), 202);
    assert_eq!(meta.angles.len(), 202);
}

#[test]
fn same_seed_same_bytes_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let status = bin()
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--threads",
                threads,
            ])
            .args(["register-budget", "--budgets", "1e4,1e6"])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out.join("register_budget.csv")).unwrap()
    };
    assert_eq!(run("a", "1"), run("b", "3"));
}
