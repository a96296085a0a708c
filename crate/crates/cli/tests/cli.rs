use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stcov(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stcov"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const KERNEL: &str = r#"{
  "params": {"s": 2, "Sigma": [[1, 0], [0, 1]], "tau": 4, "v": [0.5, 0]},
  "kernel": {"family": "NonCausalGaussian"},
  "support": {"spatial_sigmas": 3, "temporal_sigmas": 3}
}"#;

const BLOB: &str = r#"{"pattern": {"kind": "GaussianBlob", "center": [0, 0], "s0": 9, "tau0": 16, "t0": 0},
  "grid": {"shape": [24, 24, 12], "origin": [-11.5, -11.5, -5.5], "spacing": [1, 1, 1]}}"#;

fn identity_sweep(tolerance: &str) -> String {
    format!(
        r#"{{"name": "tiny", "groups": [{{
          "name": "kernels", "check": "kernel_identity",
          "grid": {{"shape": [8, 8, 8], "origin": [0, 0, 0], "spacing": [1, 1, 1]}},
          "transforms": [{{"Sx": 1.5, "A": [[1, 0.2], [0, 1]], "u": [0.5, 0], "St": 2}}],
          "params": [{{"s": 2, "Sigma": [[1, 0], [0, 1]], "tau": 4, "v": [0, 0]}}],
          "kernels": [{{"family": "NonCausalGaussian"}}, {{"family": "TimeCausalLimit", "c": 2, "K": 8}}],
          "tolerance": {tolerance}
        }}]}}"#
    )
}

#[test]
fn malformed_config_reports_position_and_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "bad.json", "{\n  \"params\": {\"s\": 2,}\n}");
    let out = stcov(&["kernel-gen"], &cfg, &d.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("column"), "{err}");
}

#[test]
fn unknown_field_and_missing_volume_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "k.json", &KERNEL.replace("\"kernel\"", "\"kernal\""));
    assert_eq!(stcov(&["kernel-gen"], &cfg, &d.path().join("o")).status.code(), Some(2));

    let cfg = write(
        d.path(),
        "w.json",
        r#"{"input": {"volume": "nowhere.json"}, "transform": {"Sx": 1, "A": [[1, 0], [0, 1]], "u": [0, 0], "St": 1}}"#,
    );
    let out = stcov(&["warp"], &cfg, &d.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
}

#[test]
fn invalid_parameters_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "k.json", &KERNEL.replace("\"s\": 2", "\"s\": -1"));
    assert_eq!(stcov(&["kernel-gen"], &cfg, &d.path().join("o")).status.code(), Some(2));
}

#[test]
fn kernel_gen_writes_support_sized_volume_and_stable_manifest() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "k.json", KERNEL);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert!(stcov(&["kernel-gen"], &cfg, &a).status.success());
    assert!(stcov(&["kernel-gen", "--seed", "0"], &cfg, &b).status.success());

    let header = json(&a.join("kernel.json"));
    let shape: Vec<u64> = header["shape"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    // 3σ in space for s = 2 and 3σ in time around the moving centre.
    assert_eq!(shape[0] % 2, 1);
    assert_eq!(shape[1], 2 * (3.0 * 2f64.sqrt()).ceil() as u64 + 1);
    let bytes = fs::metadata(a.join("kernel.f32")).unwrap().len();
    assert_eq!(bytes, 4 * shape.iter().product::<u64>());
    assert!((header["params"]["mass"].as_f64().unwrap() - 1.0).abs() < 1e-2);

    let ma = fs::read(a.join("manifest.json")).unwrap();
    assert_eq!(ma, fs::read(b.join("manifest.json")).unwrap());
    let m: Value = serde_json::from_slice(&ma).unwrap();
    assert_eq!(m["subcommand"], "kernel-gen");
    assert_eq!(m["config"]["support"]["causal_tail"], 0.001);
    assert!(m["constants"]["verify.PIPELINE_TOLERANCE"].is_number());
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    assert_eq!(outputs[0]["path"], "kernel.f32");
    assert_eq!(outputs[0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn respond_then_warp_a_written_volume() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "r.json",
        &format!(
            r#"{{"input": {BLOB},
              "params": {{"s": 2, "Sigma": [[1, 0], [0, 1]], "tau": 1, "v": [0, 0]}},
              "kernel": {{"family": "TimeCausalLimit", "c": 2, "K": 8}},
              "derivative": {{"kind": "Partial", "alpha": [1, 0], "n": 0}}}}"#
        ),
    );
    let r = d.path().join("r");
    let out = stcov(&["respond"], &cfg, &r);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let header = json(&r.join("response.json"));
    assert_eq!(header["shape"], serde_json::json!([24, 24, 12]));

    // Relative to the config file, not the working directory.
    let cfg = write(
        d.path(),
        "w.json",
        r#"{"input": {"volume": "r/response.json"},
            "transform": {"Sx": 1.2, "A": [[1, 0], [0, 1]], "u": [0.3, 0], "St": 1},
            "interpolation": "trilinear"}"#,
    );
    let w = d.path().join("w");
    let out = stcov(&["warp"], &cfg, &w);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["warped.json", "warped.f32", "mask.json", "mask.f32", "manifest.json"] {
        assert!(w.join(f).is_file(), "{f}");
    }
    let mask = fs::read(w.join("mask.f32")).unwrap();
    let values: Vec<f32> = mask
        .chunks(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    assert!(values.iter().all(|v| *v == 0.0 || *v == 1.0));
    assert!(values.contains(&0.0) && values.contains(&1.0));
}

#[test]
fn verify_exit_code_tracks_case_status() {
    let d = tempfile::tempdir().unwrap();
    let ok = write(d.path(), "ok.json", &identity_sweep("null"));
    let out = stcov(&["verify"], &ok, &d.path().join("ok"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(d.path().join("ok/summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(d.path().join("ok/cases.json").is_file());

    // No sampled identity is exact to 1e-30.
    let strict = write(d.path(), "strict.json", &identity_sweep("1e-30"));
    let out = stcov(&["verify"], &strict, &d.path().join("strict"));
    assert_eq!(out.status.code(), Some(1));
    assert!(fs::read_to_string(d.path().join("strict/summary.csv"))
        .unwrap()
        .contains("false"));

    let out = stcov(&["sweep"], &strict, &d.path().join("sweep"));
    assert_eq!(out.status.code(), Some(0));
}
