use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nlsctl(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nlsctl"));
    cmd.args(args).env_remove("NLSCTL_OUTPUT");
    if let Some(p) = env_out {
        cmd.env("NLSCTL_OUTPUT", p);
    }
    cmd.output().expect("spawn nlsctl")
}

fn template(name: &str) -> String {
    let out = nlsctl(&["list-experiments", "--template", name], None);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn lists_all_experiments() {
    let out = nlsctl(&["list-experiments"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["decay", "hum", "steer", "global_steer", "bilinear", "quadrilinear", "gcc", "sphere", "carleman", "norms"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
    assert_eq!(nlsctl(&["list-experiments", "--template", "nope"], None).status.code(), Some(2));
}

#[test]
fn validate_reports_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, template("steer")).unwrap();
    assert!(nlsctl(&["validate", good.to_str().unwrap()], None).status.success());

    let bad = dir.path().join("bad.toml");
    let text = template("steer").replace("periods = [1.0]", "periods = [1.0, 1.0, 1.0]").replace("resolution = [32]", "resolution = [8, 8, 8]").replace("s = 0.0", "s = 0.4");
    fs::write(&bad, text).unwrap();
    let out = nlsctl(&["validate", bad.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ok"], false);
    assert!(v["diagnostics"].as_array().unwrap().iter().any(|d| d["path"] == "steer.s"), "{v}");

    let typo = dir.path().join("typo.toml");
    fs::write(&typo, template("sphere").replace("delta = 0.5", "detla = 0.5")).unwrap();
    let out = nlsctl(&["validate", typo.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn missing_config_is_io_error() {
    let out = nlsctl(&["run", "/nonexistent/config.toml"], None);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_uses_env_root_and_is_deterministic_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gcc.toml");
    fs::write(&cfg, template("gcc")).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(nlsctl(&["--jobs", "1", "run", cfg.to_str().unwrap()], Some(&a)).status.success());
    assert!(nlsctl(&["--jobs", "4", "run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()], None).status.success());
    let files = ["config.toml", "schema.json", "summary.json", "sphere_t0.csv"];
    for f in files {
        let x = fs::read(a.join("gcc").join(f)).unwrap();
        let y = fs::read(b.join("gcc").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let echo = fs::read_to_string(a.join("gcc/config.toml")).unwrap();
    let back = nls_control::experiment::parse_config(&echo).unwrap();
    assert_eq!(back, nls_control::experiment::parse_config(&template("gcc")).unwrap());
}
