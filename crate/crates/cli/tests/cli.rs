use std::path::Path;
use std::process::{Command, Output};

fn dirheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirheat")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(code(&dirheat(&["frobnicate"])), 3);
    assert_eq!(code(&dirheat(&["verify", "--suite", "nope", "--config", "x.json"])), 3);
    assert_eq!(code(&dirheat(&["--help"])), 0);
}

#[test]
fn version_carries_a_revision() {
    let o = dirheat(&["--version"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains(env!("CARGO_PKG_VERSION")) && text.contains("-g"), "{text}");
}

#[test]
fn missing_config_is_an_io_error() {
    let o = dirheat(&["kernel", "dump-j", "--config", "/nonexistent/dirheat.json"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn invalid_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in [r#"{"seed": 1, "kernel": "stable:alpha=3"}"#, r#"{"n_paths": 5}"#, "{ not json", r#"{"seed": 1, "wat": 2}"#]
        .iter()
        .enumerate()
    {
        let cfg = write(dir.path(), &format!("bad{i}.json"), text);
        let o = dirheat(&["kernel", "dump-j", "--config", &cfg]);
        assert_eq!(code(&o), 3, "{text}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn duplicate_fields_warn() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dup.json", r#"{"seed": 1, "seed": 2, "radii": [0.5, 1.0]}"#);
    let o = dirheat(&["kernel", "dump-j", "--config", &cfg]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("# seed=2"));
}

#[test]
fn kernel_table_lists_every_radius() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.json", r#"{"seed": 1, "radii": [0.5, 1.0, 2.0]}"#);
    let out = dir.path().join("j.csv");
    let o = dirheat(&["kernel", "dump-j", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "r,j");
    assert_eq!(rows.len(), 4);
    let j1: f64 = rows[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((j1 - 1.0 / std::f64::consts::PI).abs() < 1e-8, "{j1}");
}

#[test]
fn simulation_is_reproducible_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sim.json",
        r#"{"seed": 9, "x0": [0.2], "times": [0.05, 0.1], "n_paths": 3000, "cell_width": 0.1}"#,
    );
    let run = |name: &str| {
        let out = dir.path().join(name);
        assert_eq!(code(&dirheat(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()])), 0);
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let other = write(
        dir.path(),
        "sim2.json",
        r#"{"seed": 10, "x0": [0.2], "times": [0.05, 0.1], "n_paths": 3000, "cell_width": 0.1}"#,
    );
    let out = dir.path().join("c.csv");
    assert_eq!(code(&dirheat(&["simulate", "--config", &other, "--out", out.to_str().unwrap()])), 0);
    assert_ne!(a, std::fs::read(out).unwrap());
}

#[test]
fn verify_writes_a_report_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.json", r#"{"seed": 3}"#);
    let out = dir.path().join("report.json");
    let run = || {
        let o = dirheat(&["verify", "--suite", "kernel-scaling", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(&out).unwrap(), std::fs::read(out.with_extension("csv")).unwrap())
    };
    let (json, csv) = run();
    assert_eq!((json.clone(), csv), run());
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["status"], "pass");
    assert_eq!(v["header"]["seed"], 3);
    assert_eq!(v["header"]["config_hash"].as_str().unwrap().len(), 64);
    assert!(v.get("runtime_s").is_none());
}

#[test]
fn green_oracle_passes_with_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g.json", r#"{"seed": 1}"#);
    let out = dir.path().join("g.json.out");
    let o = dirheat(&["verify", "--suite", "green-oracle", "--config", &cfg, "--out", out.to_str().unwrap(), "--timing"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    assert!(v["runtime_s"].as_f64().unwrap() >= 0.0);
    assert!(!v["grid"].as_array().unwrap().is_empty());
}

#[test]
fn conditions_check_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"seed": 1, "kernel": "relativistic:alpha=1.5,m=0.3"}"#);
    let o = dirheat(&["check-conditions", "--config", &cfg]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["suite"], "check-conditions");
}
