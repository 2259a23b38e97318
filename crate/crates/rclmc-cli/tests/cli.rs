//! End-to-end checks of the `rclmc` binary: exit codes, output formats, and
//! reproducibility of emitted files.

use std::path::Path;
use std::process::{Command, Output};

fn rclmc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rclmc"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SAMPLE_CONFIG: &str = r#"{
  "method": "rclmc",
  "target": {"name": "product", "lambdas": [1.0, 2.0]},
  "phi_spec": "uniform",
  "h": 0.01,
  "M": 50,
  "N": 40,
  "master_seed": 11,
  "init": {"normal": {"mean": 1.0, "scale": 1.0}},
  "observables": ["second_moment"],
  "snapshot_schedule": {"geometric": 2.0}
}"#;

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn sample_writes_csv_with_contract_header() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", SAMPLE_CONFIG);
    let out = run(rclmc().args(["--out", dir.path().to_str().unwrap(), "sample", "--config"]).arg(&config));
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sample_second_moment.csv")).unwrap();
    let mut lines = csv.lines();
    let provenance = lines.next().unwrap();
    assert!(provenance.starts_with("# config="), "got {provenance}");
    assert_eq!(provenance.len(), "# config=".len() + 16);
    assert_eq!(lines.next().unwrap(), "m,elapsed,nominal_cost,work_cost,error,stderr");
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,"), "initial snapshot row first, got {first}");
}

#[test]
fn sample_zero_iterations_emits_only_initial_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", &SAMPLE_CONFIG.replace("\"M\": 50", "\"M\": 0"));
    let out = run(rclmc().args(["--out", dir.path().to_str().unwrap(), "sample", "--config"]).arg(&config));
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("sample_second_moment.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("0,"));
}

#[test]
fn sample_twice_is_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let config = write_config(dir_a.path(), "c.json", SAMPLE_CONFIG);
    for dir in [&dir_a, &dir_b] {
        let out =
            run(rclmc().args(["--out", dir.path().to_str().unwrap(), "sample", "--config"]).arg(&config));
        assert!(out.status.success());
    }
    let a = std::fs::read(dir_a.path().join("sample_second_moment.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("sample_second_moment.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn binary_snapshot_header_layout() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", SAMPLE_CONFIG);
    let out = run(rclmc()
        .args(["--out", dir.path().to_str().unwrap(), "sample", "--binary", "--config"])
        .arg(&config));
    assert!(out.status.success());
    let bytes = std::fs::read(dir.path().join("snapshots.bin")).unwrap();
    assert_eq!(&bytes[0..4], b"RCLM");
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    assert_eq!(u32_at(4), 1); // version
    let d = u32_at(8);
    let n = u32_at(12);
    let snaps = u32_at(16);
    assert_eq!(d, 2);
    assert_eq!(n, 40);
    // geometric(2.0) over M=50: 0,1,2,4,8,16,32,50
    assert_eq!(snaps, 8);
    assert_eq!(bytes.len(), 20 + (d * n * snaps * 8) as usize);
}

#[test]
fn invalid_json_reports_line_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "bad.json", "{\n  \"method\": oops\n}");
    let out = run(rclmc().args(["sample", "--config"]).arg(&config));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.json:2:"), "stderr: {stderr}");
}

#[test]
fn semantically_invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config =
        write_config(dir.path(), "c.json", &SAMPLE_CONFIG.replace("\"h\": 0.01", "\"h\": 0.0"));
    let out = run(rclmc().args(["sample", "--config"]).arg(&config));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("h = 0"), "stderr: {stderr}");
}

#[test]
fn unknown_suite_exits_2() {
    let out = run(rclmc().args(["verify", "--suite", "banana"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_exits_2() {
    let out = run(rclmc().args(["sample", "--frobnicate"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_json_has_contract_fields() {
    let out = run(rclmc().args([
        "bounds", "--method", "lmc", "--case", "1", "--w0", "2", "--mu", "1", "--l", "1", "--d",
        "4", "--h", "0.25", "--m", "0", "--json",
    ]));
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let obj = value.as_object().unwrap();
    for key in ["bound", "decay", "bias", "admissible", "violated", "inputs"] {
        assert!(obj.contains_key(key), "missing {key}");
    }
    assert_eq!(obj["bound"].as_f64().unwrap(), 4.0);
}

#[test]
fn plan_invalid_epsilon_exits_2() {
    let out = run(rclmc().args([
        "plan", "--method", "lmc", "--case", "1", "--eps", "-0.5", "--w0", "1", "--mu", "1",
        "--l", "1", "--d", "2",
    ]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plan_passthrough_matches_library() {
    let out = run(rclmc().args([
        "plan", "--method", "rclmc", "--case", "2", "--eps", "0.1", "--w0", "5", "--mu", "1",
        "--l", "4", "--lips", "1,2,3,4", "--json",
    ]));
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let plan = rclmc::bounds::rclmc_stopping_case2(
        0.1,
        5.0,
        1.0,
        4.0,
        &[1.0, 2.0, 3.0, 4.0],
        &[0.0; 4],
    )
    .unwrap();
    assert_eq!(value["h"].as_f64().unwrap(), plan.h);
    assert_eq!(value["M"].as_u64().unwrap(), plan.iterations);
}

#[test]
fn benchmark_rejects_mixed_targets() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "b.json",
        r#"{"configs": [
          {"method": "rclmc", "target": {"name": "product", "lambdas": [1.0]}, "phi_spec": "uniform",
           "h": 0.01, "M": 10, "N": 4, "master_seed": 1},
          {"method": "rclmc", "target": {"name": "product", "lambdas": [2.0]}, "phi_spec": "uniform",
           "h": 0.01, "M": 10, "N": 4, "master_seed": 1}
        ]}"#,
    );
    let out = run(rclmc().args(["benchmark", "--config"]).arg(&config));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_emits_machine_readable_json() {
    // The cheapest suite end-to-end; the full set runs in the library tests.
    let out = run(rclmc().args(["verify", "--suite", "recursion"]));
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["suite"], "recursion");
    assert_eq!(value["passed"], true);
    assert!(value["checks"].as_array().unwrap().len() > 5);
}
