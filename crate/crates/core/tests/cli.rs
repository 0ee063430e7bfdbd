//! End-to-end checks of the command-line binary: exit codes, output
//! files, and the byte-identical-rerun contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shiftfront"))
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn desk_config() -> &'static str {
    "\
d = 1.0
a = 1.0
a0 = -1.0
b = 1.0
c = 0.25
h0 = 2.0
mu0 = 0.5
mu_slope = 0.25
grid_n = 128
t_max = 3.0
snapshot_dt = 1.0
"
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn critical_speed_prints_value_and_exits_zero() {
    let dir = tempdir("critical-speed");
    let cfg = write_cfg(&dir, "run.cfg", desk_config());
    let out = run(bin()
        .arg("critical-speed")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out")));
    assert!(out.status.success(), "stderr: {}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("c0 = 3.64371065"), "stdout: {stdout}");
    assert!(dir.join("out/semiwave_c0.csv").exists());
}

#[test]
fn missing_required_field_exits_one_naming_it() {
    let dir = tempdir("missing-field");
    let cfg = write_cfg(&dir, "bad.cfg", "d = 1.0\na = 1.0\n");
    let out = run(bin().arg("classify").arg("--config").arg(&cfg));
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("a0"));
}

#[test]
fn threshold_rejects_supercritical_range_with_exit_one() {
    let dir = tempdir("threshold-reject");
    let cfg = write_cfg(&dir, "run.cfg", desk_config()); // h0 = 2 > pi/2
    let out = run(bin()
        .arg("threshold")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out")));
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(
        stderr.contains("critical length"),
        "stderr was: {stderr}"
    );
}

#[test]
fn identical_config_produces_byte_identical_outputs() {
    let dir = tempdir("determinism");
    let cfg = write_cfg(&dir, "run.cfg", desk_config());
    for sub in ["out_a", "out_b"] {
        let out = run(bin()
            .arg("simulate")
            .arg("--config")
            .arg(&cfg)
            .arg("--out-dir")
            .arg(dir.join(sub)));
        assert!(out.status.success(), "stderr: {}", text(&out.stderr));
    }
    for name in ["trajectory.csv", "snapshot_0000.csv", "snapshot_0003.csv"] {
        let a = fs::read(dir.join("out_a").join(name)).unwrap();
        let b = fs::read(dir.join("out_b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differed between reruns");
    }
    // the config hash is embedded in every output header
    let header = fs::read_to_string(dir.join("out_a/trajectory.csv")).unwrap();
    assert!(header.starts_with("# config_hash: "));
}

#[test]
fn verify_suite_passes_on_a_desk_configuration() {
    let dir = tempdir("verify");
    let cfg = write_cfg(
        &dir,
        "run.cfg",
        "\
d = 1.0
a = 1.0
a0 = -1.0
b = 1.0
c = 0.25
h0 = 2.0
mu0 = 0.5
mu_slope = 0.25
grid_n = 64
t_max = 3.0
",
    );
    let out = run(bin()
        .arg("verify")
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out")));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", text(&out.stderr));
    let manifest = fs::read_to_string(dir.join("out/verify.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 6);
    assert!(manifest.lines().all(|line| line.contains("\"pass\":true")));
}

#[test]
fn semiwave_speed_outside_range_is_a_usage_error() {
    let dir = tempdir("semiwave-range");
    let cfg = write_cfg(&dir, "run.cfg", desk_config());
    let out = run(bin()
        .arg("semiwave")
        .arg("--config")
        .arg(&cfg)
        .arg("--speed")
        .arg("2.5")
        .arg("--out-dir")
        .arg(dir.join("out")));
    assert_eq!(out.status.code(), Some(1));
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("shiftfront-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}
