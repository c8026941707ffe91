use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"{
  "chain": {"m": 11, "period": 3, "omega_pattern": [1.5, 0.75, 0.75], "coupling_pattern": [0.15, 1.0, 1.0]},
  "control": {"termination": {"t_max": 20.0}},
  "experiment": {"kind": "transfer", "initial_site": 1}
}"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn lyapchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lyapchain")).args(args).env_remove("LYAPCHAIN_OUTPUT").output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn transfer_writes_csv_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out_dir = dir.path().join("out");
    let out = lyapchain(&["transfer", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));

    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let mut lines = csv.split("\r\n");
    assert_eq!(lines.next(), Some("t,fidelity,lyapunov,f_1,f_2,re_end_amp,im_end_amp,norm_error"));
    assert_eq!(csv.split("\r\n").filter(|l| !l.is_empty()).count(), 1 + 41);

    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["terminated_by"], "t_max");
    assert!(summary["final_fidelity"].as_f64().unwrap() > 0.5);
    assert_eq!(summary["config"]["chain"]["m"], 11);

    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["config_hash"], summary["config_hash"]);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs, ["trajectory.csv", "summary.json", "manifest.json"]);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = lyapchain(&["--jobs", "2", "run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        csvs.push(std::fs::read(out_dir.join("trajectory.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn missing_chain_length_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(r#""m": 11, "#, "");
    let cfg = write_config(dir.path(), "bad.json", &text);
    let out = lyapchain(&["transfer", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`m`"), "{}", stderr(&out));
}

#[test]
fn schema_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let cases = [
        ("malformed.json", "{\"chain\": "),
        ("unknown_key.json", &*SMALL.replace("\"initial_site\"", "\"initial_spot\"")),
        ("bad_gain.json", &*SMALL.replace("\"termination\"", "\"gains\": [1.0, -1.0], \"termination\"")),
        ("bad_kind.json", &*SMALL.replace("\"transfer\"", "\"teleport\"")),
    ];
    for (name, text) in cases {
        let cfg = write_config(dir.path(), name, text);
        let out = lyapchain(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", stderr(&out));
    }
    let missing = lyapchain(&["run", "--config", "/no/such/config.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn subcommand_must_match_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out = lyapchain(&["scan", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("transfer"));
}

#[test]
fn numeric_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    // p_f above the lowest eigenvalue breaks the ordering the design needs
    let out = lyapchain(&["transfer", "--config", cfg.to_str().unwrap(), "--set", "control.p_f=0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("p_f"), "{}", stderr(&out));
}

#[test]
fn overrides_change_the_run_and_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let cfg = cfg.to_str().unwrap();
    let run = |name: &str, sets: &[&str]| {
        let out_dir = dir.path().join(name);
        let mut args = vec!["transfer", "--config", cfg, "--out", out_dir.to_str().unwrap()];
        for s in sets {
            args.extend(["--set", s]);
        }
        let out = lyapchain(&args);
        assert!(out.status.success(), "{}", stderr(&out));
        read_json(&out_dir.join("manifest.json"))
    };
    let base = run("base", &[]);
    let same = run("same", &["control.gains=[1.0, 1.0]"]);
    let longer = run("longer", &["chain.m=14", "chain.omega_overrides={\"2\": 0.8}"]);
    let gains = run("gains", &["control.gains=[1.0, 2.0]"]);
    let indexed = run("indexed", &["chain.omega_pattern.0=1.4"]);
    assert_eq!(base["config_hash"], same["config_hash"]);
    assert_ne!(base["config_hash"], longer["config_hash"]);
    assert_ne!(base["config_hash"], gains["config_hash"]);
    assert_ne!(base["config_hash"], indexed["config_hash"]);
    assert_eq!(indexed["config"]["chain"]["omega_pattern"][0], 1.4);
    assert_eq!(longer["config"]["chain"]["m"], 14);
    assert_eq!(gains["config"]["control"]["gains"][1], 2.0);

    let bad = lyapchain(&["transfer", "--config", cfg, "--set", "no_equals_sign"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn output_root_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let root = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_lyapchain"))
        .args(["transfer", "--config", cfg.to_str().unwrap()])
        .env("LYAPCHAIN_OUTPUT", &root)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(root.join("manifest.json").exists());
}

#[test]
fn bundled_square_wave_config_stops_at_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments/fig12_square.json");
    let out = lyapchain(&["transfer", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["terminated_by"], "fidelity_target");
}
