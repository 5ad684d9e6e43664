use std::path::Path;
use std::process::{Command, Output};

fn chirpsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chirpsync")).args(args).output().unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(
        &path,
        r#"{
            "distances_km": [200],
            "trials_per_point": 1,
            "ts": {"alpha": 0.7853981633974483, "ns": 256},
            "frame": {"payload_symbols": 4096, "rolloff": 0.1, "tx_sps": 2, "baud_hz": 60e9},
            "baselines": false
        }"#,
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn complexity_defaults() {
    let out = chirpsync(&["complexity"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["proposed_mults"], 3_727_360);
    assert_eq!(v["traditional_mults"], 73_252_874);
}

#[test]
fn sweep_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("run");
    let out = chirpsync(&["sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "3", "--sps", "1.25"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let data = std::fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    assert_eq!(data.lines().count(), 2);
    assert!(data.lines().nth(1).unwrap().contains(",1.25,"));
    assert!(out_dir.join("summary.csv").exists());
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 3);
    assert!(meta["timestamp_unix_s"].as_u64().unwrap() > 0);
}

#[test]
fn simulate_prints_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = chirpsync(&["simulate", "--config", &cfg, "--fo-hz", "1e9", "--to", "40"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["fo_hz"].as_f64().unwrap() - 1e9).abs() < 150e6);
    assert!((v["to_samples"].as_f64().unwrap() - 40.0).abs() < 2.5);
}

#[test]
fn gen_ts_writes_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let out = chirpsync(&["gen-ts", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("ts.csv")).unwrap();
    assert_eq!(text.lines().count(), 1025);
    let out = chirpsync(&["gen-ts", "--sps", "1.25", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("ts.csv")).unwrap();
    assert_eq!(text.lines().count(), 1281);
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"distances": [0]}"#).unwrap();
    for args in [
        vec!["sweep", "--config", bad.to_str().unwrap()],
        vec!["sweep", "--config", "/nonexistent/cfg.json"],
        vec!["complexity", "--sps", "3"],
        vec!["simulate", "--sps", "1.5"],
    ] {
        let out = chirpsync(&args);
        assert!(!out.status.success(), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let file = dir.path().join("occupied");
    std::fs::write(&file, b"").unwrap();
    let out = chirpsync(&["sweep", "--config", &cfg, "--out", file.to_str().unwrap()]);
    assert!(!out.status.success());
}
