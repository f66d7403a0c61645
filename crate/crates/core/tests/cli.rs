//! End-to-end runs of the `gsmfde` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SWEEP: &str = r#"
seed = 5
detectors = ["admm", "mmse"]
snr_db = [0.0, 10.0]

[system]
n = 8
n_cp = 1
n_users = 1
n_tx = 2
n_active = 1
n_rx = 4
modulation = 4

[channel]
profile = "uniform-2"

[detector]
q = 10
restarts = 2
rho_x = 2.0
rho_z = 2.0

[stop]
min_errors = 50
max_blocks = 40
"#;

const FAMILY: &str = r#"
seed = 3
target_ber = 0.1
snr_db = [0.0, 10.0, 20.0]

[channel]
profile = "uniform-2"

[detector]
q = 10
restarts = 2
rho_x = 1.0
rho_z = 1.0

[stop]
min_errors = 50
max_blocks = 20

[[member]]
label = "gsm"
system = { n = 8, n_cp = 1, n_users = 1, n_tx = 2, n_active = 1, n_rx = 4, modulation = 4 }

[[member]]
label = "conv"
system = { n = 8, n_cp = 1, n_users = 1, n_tx = 1, n_active = 1, n_rx = 4, modulation = 16 }
"#;

fn gsmfde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsmfde")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn files_with_extension(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut found: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    found.sort();
    found
}

#[test]
fn profile_dump_prints_etu_taps() {
    let out = gsmfde(&["profile-dump"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "tap,power");
    assert_eq!(lines.len(), 12);
    let total: f64 = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sweep.toml", SWEEP);
    let out_dir = dir.path().join("out");
    let out = gsmfde(&["sweep", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csvs = files_with_extension(&out_dir, "csv");
    assert_eq!(csvs.len(), 2);
    assert_eq!(files_with_extension(&out_dir, "json").len(), 2);
    let body = fs::read_to_string(&csvs[0]).unwrap();
    assert!(body.lines().next().unwrap().contains("ber"));
    assert_eq!(body.lines().count(), 3);
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sweep.toml", SWEEP);
    let path = config.to_str().unwrap();
    let out_dir = dir.path().join("out");
    let out_dir = out_dir.to_str().unwrap();
    for extra in [
        vec!["--override", "system.n_active=7"],
        vec!["--override", "system.bogus=1"],
        vec!["--override", "stop.min_errors=0"],
        vec!["--override", "system.n_cp=0", "--override", "channel.profile=\"etu\""],
    ] {
        let mut args = vec!["sweep", "--config", path, "--out", out_dir];
        args.extend(extra.iter());
        let out = gsmfde(&args);
        assert_eq!(out.status.code(), Some(2), "{extra:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = gsmfde(&["sweep", "--config", "/nonexistent.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let mut bad = SWEEP.to_string();
    bad.push_str("\nunknown_key = 1\n");
    let config = write_config(dir.path(), "bad.toml", &bad);
    let out = gsmfde(&["sweep", "--config", config.to_str().unwrap(), "--out", out_dir]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_search_is_refused_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sweep.toml", SWEEP);
    let out_dir = dir.path().join("out");
    let out = gsmfde(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--override",
        "detectors=[\"mld\"]",
        "--override",
        "oracle_guard=1000",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sweep.toml", SWEEP);
    let mut bodies = Vec::new();
    for workers in ["1", "3"] {
        let out_dir = dir.path().join(format!("w{workers}"));
        let out = gsmfde(&[
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--workers",
            workers,
            "--seed",
            "11",
        ]);
        assert!(out.status.success());
        bodies.push(files_with_extension(&out_dir, "csv").iter().map(|p| fs::read(p).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn fig2_reports_every_member() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "family.toml", FAMILY);
    let out_dir = dir.path().join("out");
    let out = gsmfde(&["fig2", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csvs = files_with_extension(&out_dir, "csv");
    assert_eq!(csvs.len(), 1);
    let body = fs::read_to_string(&csvs[0]).unwrap();
    assert!(body.contains("gsm") && body.contains("conv"));
}

#[test]
fn oracle_compare_on_tiny_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/oracle_tiny.toml");
    let out = gsmfde(&[
        "oracle-compare",
        "--config",
        config,
        "--out",
        out_dir.to_str().unwrap(),
        "--override",
        "instances=10",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("match rate"));
    let csvs = files_with_extension(&out_dir, "csv");
    assert_eq!(fs::read_to_string(&csvs[0]).unwrap().lines().count(), 11);
}
