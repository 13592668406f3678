//! The `kerr-ion` binary: subcommands, outputs and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use kerr_ion::harness::{read_table, RunConfig, SWEEP_ETA_HEADER, TRAJECTORY_HEADER, WIGNER_HEADER};

fn kerr_ion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerr-ion"))
        .args(args)
        .env_remove("KERR_ION_WORKERS")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn evolve_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        t_total_ms: 0.5,
        record_interval_us: 50.0,
        output_dir: dir.path().join("run"),
        ..RunConfig::default()
    };
    let cfg_path = dir.path().join("reference.cfg");
    std::fs::write(&cfg_path, cfg.to_ini()).unwrap();

    let out = kerr_ion(&["evolve", "--config", path_str(&cfg_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_table(&dir.path().join("run/trajectory.csv")).unwrap();
    assert_eq!(t.header, TRAJECTORY_HEADER);
    assert_eq!(t.rows.len(), 11);
    assert!(dir.path().join("run/phonon_populations.csv").exists());
}

#[test]
fn sweep_eta_writes_fifteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = kerr_ion(&[
        "sweep-eta",
        "--t-ms",
        "10",
        "--eta",
        "0.10:0.24:0.01",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_table(&dir.path().join("sweep_eta.csv")).unwrap();
    assert_eq!(t.header, SWEEP_ETA_HEADER);
    assert_eq!(t.rows.len(), 15);
    assert!(String::from_utf8_lossy(&out.stdout).contains("optimum eta"));
}

#[test]
fn wigner_of_the_ideal_cat() {
    let dir = tempfile::tempdir().unwrap();
    let out = kerr_ion(&["wigner", "--tau", "3.141592653589793", "--points", "41", "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_table(&dir.path().join("wigner.csv")).unwrap();
    assert_eq!(t.header, WIGNER_HEADER);
    assert_eq!(t.rows.len(), 41 * 41);
    assert!(t.numbers("w").unwrap().iter().any(|&w| w < 0.0));
}

#[test]
fn ideal_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = kerr_ion(&[
        "ideal",
        "--tau",
        "0.6283185307179586",
        "--points",
        "31",
        "--set",
        "alpha_re=1.5",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_table(&dir.path().join("moments.csv")).unwrap();
    assert!((m.numbers("mean_x").unwrap()[0] - 3.0).abs() < 1e-9);
    assert!(dir.path().join("wigner_tau_0.csv").exists());
}

#[test]
fn usage_errors_exit_one() {
    let out = kerr_ion(&["evolve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"));
    assert_eq!(kerr_ion(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(kerr_ion(&["evolve", "--eta", "1.5"]).status.code(), Some(1));
    assert_eq!(kerr_ion(&["evolve", "--set", "bogus_key=1"]).status.code(), Some(1));
    assert_eq!(
        kerr_ion(&["evolve", "--config", "/nonexistent/reference.cfg"]).status.code(),
        Some(1)
    );
    assert_eq!(kerr_ion(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_aborts_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = kerr_ion(&["evolve", "--dt-ns", "50", "--t-ms", "0.01", "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("under-resolved"));
}

#[test]
fn validate_passes() {
    let out = kerr_ion(&["validate"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
}
