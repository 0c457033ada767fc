//! End-to-end tests running the compiled binary on small configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_magscatter")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const ZERO_2D: &str = r#"{
  "grid": {"dim": 2, "half_width": 6.0, "points_per_axis": 32},
  "potential": {},
  "wave": {"k": 2.0}
}"#;

const GAUSSIAN_2D: &str = r#"{
  "grid": {"dim": 2, "half_width": 6.0, "points_per_axis": 32},
  "potential": {"v": {"kind": "scalar", "profile": {"family": "gaussian_bump", "amplitude": 0.2, "sigma": 1.0}}},
  "wave": {"k": 2.0},
  "n_directions": 8
}"#;

#[test]
fn solve_zero_potential_writes_zero_field_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", ZERO_2D);
    let out = dir.path().join("out");
    let res = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));

    // byte-identical config echo
    let echo = std::fs::read(out.join("config.json")).unwrap();
    assert_eq!(echo, ZERO_2D.as_bytes());

    // the scattered field is identically zero
    let bytes = std::fs::read(out.join("u_sc.bin")).unwrap();
    assert_eq!(&bytes[..16], b"MAGSCATTER_FLD01");
    let payload = &bytes[36..];
    assert_eq!(payload.len(), 32 * 32 * 16);
    assert!(payload.iter().all(|&b| b == 0));

    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("diagnostics.json")).unwrap())
            .unwrap();
    assert_eq!(diag["operator_norm_estimate"].as_f64().unwrap(), 0.0);
    assert_eq!(diag["linear_residual"].as_f64().unwrap(), 0.0);
}

#[test]
fn invalid_decay_exponent_exits_2_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
  "grid": {"dim": 2, "half_width": 6.0, "points_per_axis": 32},
  "potential": {"v": {"kind": "scalar", "profile": {"family": "power_tail", "amplitude": 0.1, "sigma": 1.0, "mu": 1.5}}},
  "wave": {"k": 2.0}
}"#,
    );
    let out = dir.path().join("out");
    let res = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_slice(&res.stderr).expect("stderr is one JSON object");
    assert_eq!(err["error"]["kind"], "validation");
    assert!(err["error"]["message"].as_str().unwrap().contains("mu"));
}

#[test]
fn diverging_born_series_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
  "grid": {"dim": 2, "half_width": 6.0, "points_per_axis": 32},
  "potential": {"v": {"kind": "scalar", "profile": {"family": "gaussian_bump", "amplitude": 50.0, "sigma": 1.0}}},
  "wave": {"k": 1.0},
  "solver": {"method": "born_series"}
}"#,
    );
    let out = dir.path().join("out");
    let res = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "numerical");
}

#[test]
fn solve_is_deterministic_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", GAUSSIAN_2D);
    let (o1, o2) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&o1, &o2] {
        let res =
            run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    }
    let f1 = std::fs::read(o1.join("u_sc.bin")).unwrap();
    let f2 = std::fs::read(o2.join("u_sc.bin")).unwrap();
    assert_eq!(f1, f2);
}

#[test]
fn amplitude_then_export_angle_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", GAUSSIAN_2D);
    let out = dir.path().join("out");
    let res =
        run(&["amplitude", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("amplitude.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("k,theta_x"));
    assert!(lines.len() >= 9, "8 directions plus header, got {}", lines.len());

    let res = run(&["export", "--out", out.to_str().unwrap(), "--kind", "amplitude_angle"]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let dat = std::fs::read_to_string(out.join("amplitude_angle.dat")).unwrap();
    assert!(dat.starts_with("# "));
    let first = dat.lines().nth(1).unwrap();
    let cols: Vec<&str> = first.split('\t').collect();
    assert_eq!(cols.len(), 2);
    assert!(cols[1].parse::<f64>().unwrap() > 0.0);

    let res = run(&["export", "--out", out.to_str().unwrap(), "--kind", "field_slice"]);
    assert!(res.status.success());
    let slice = std::fs::read_to_string(out.join("field_slice.dat")).unwrap();
    // header + 32 rows of 32 tab-separated values
    assert_eq!(slice.lines().count(), 33);
    assert_eq!(slice.lines().nth(5).unwrap().split('\t').count(), 32);
}

#[test]
fn export_unknown_kind_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&["export", "--out", dir.path().to_str().unwrap(), "--kind", "histogram"]);
    assert_eq!(res.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("histogram"));
}

#[test]
fn single_value_sweep_writes_one_row_without_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
  "grid": {"dim": 2, "half_width": 6.0, "points_per_axis": 32},
  "potential": {"v": {"kind": "scalar", "profile": {"family": "gaussian_bump", "amplitude": 1.0, "sigma": 1.0}}},
  "wave": {"k": 2.0},
  "sweep": {"axis": "epsilon", "values": [0.1]}
}"#,
    );
    let out = dir.path().join("out");
    let res = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one data row");
    assert!(!csv.contains("slope"));

    let res = run(&["export", "--out", out.to_str().unwrap(), "--kind", "sweep_curve"]);
    assert!(res.status.success());
    assert!(out.join("sweep_curve.dat").exists());
}

#[test]
fn dense_quadrature_rejected_on_large_grids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
  "grid": {"dim": 2, "half_width": 6.0, "points_per_axis": 128},
  "potential": {"v": {"kind": "scalar", "profile": {"family": "gaussian_bump", "amplitude": 0.2, "sigma": 1.0}}},
  "wave": {"k": 2.0}
}"#,
    );
    let out = dir.path().join("out");
    let res = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quadrature",
        "dense",
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn born_command_tabulates_first_order_and_improved() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", GAUSSIAN_2D);
    let out = dir.path().join("out");
    let res = run(&["born", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("born.csv")).unwrap();
    assert!(csv.contains("born_first_order"));
    assert!(csv.contains("born_improved"));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("born.json")).unwrap()).unwrap();
    // V-only potential: the W-dependent second-order terms vanish
    assert!(doc["i1"][0].as_f64().unwrap().abs() < 1e-12);
    assert!(doc["i4"][0].as_f64().unwrap().abs() > 0.0);
}

#[test]
fn invert_reconstructs_field_on_output_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
  "grid": {"dim": 2, "half_width": 6.0, "points_per_axis": 48},
  "potential": {"v": {"kind": "scalar", "profile": {"family": "gaussian_bump", "amplitude": 0.3, "sigma": 1.0}}},
  "wave": {"k": 2.0},
  "invert": {
    "output_grid": {"dim": 2, "half_width": 4.0, "points_per_axis": 24},
    "k_list": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
    "n_directions": 8
  }
}"#,
    );
    let out = dir.path().join("out");
    let res = run(&["invert", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("records.csv").exists());
    let bytes = std::fs::read(out.join("reconstruction.bin")).unwrap();
    assert_eq!(&bytes[..16], b"MAGSCATTER_FLD01");
    // real field on the 24^2 output grid
    assert_eq!(bytes.len(), 36 + 24 * 24 * 8);
    // reconstruction peaks near the center with roughly the right height
    let vals: Vec<f64> = (0..24 * 24)
        .map(|i| f64::from_le_bytes(bytes[36 + 8 * i..44 + 8 * i].try_into().unwrap()))
        .collect();
    let peak = vals.iter().cloned().fold(f64::MIN, f64::max);
    assert!(peak > 0.15 && peak < 0.45, "peak = {peak}");
}
