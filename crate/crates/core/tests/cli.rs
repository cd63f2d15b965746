use std::path::Path;
use std::process::{Command, Output};

use dualchart::cli::DEFAULT_CONFIG;

fn dualchart(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dualchart"));
    cmd.args(args).env_remove("DUALCHART_OUT");
    if let Some(dir) = out_env {
        cmd.env("DUALCHART_OUT", dir);
    }
    cmd.output().unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn list_suites_names_every_suite() {
    let out = dualchart(&["--list-suites"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["brackets", "gauge", "dynamics", "quantum"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{text}");
    }
}

#[test]
fn missing_mass_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    let text: String = DEFAULT_CONFIG
        .lines()
        .filter(|l| !l.trim_start().starts_with("m ="))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&cfg, text).unwrap();
    let out = dualchart(
        &["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("constants.m"), "{err}");
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn unknown_suite_and_bad_flags_exit_with_config_status() {
    assert_eq!(dualchart(&["--suite", "optics"], None).status.code(), Some(2));
    assert_eq!(dualchart(&["--seed", "minus-one"], None).status.code(), Some(2));
    assert_eq!(dualchart(&["--frobnicate"], None).status.code(), Some(2));
}

#[test]
fn unreadable_config_names_the_file() {
    let out = dualchart(&["--config", "/nonexistent/scenario.toml"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("scenario.toml"));
}

#[test]
fn brackets_suite_reports_every_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = dualchart(&["--suite", "brackets", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(dir.path());
    assert_eq!(s["passed"], true);
    let suites = s["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 1);
    let checks = suites[0]["checks"].as_array().unwrap();
    for fam in ["{q,p}", "{q,pi}", "{B,piB}", "{Q,Q}", "{Q,pi}", "{Q,p}"] {
        let c = checks
            .iter()
            .find(|c| c["name"] == format!("max_deviation {fam}"))
            .unwrap_or_else(|| panic!("{fam} missing"));
        assert!(c["value"].as_f64().unwrap() < 1e-8);
        assert_eq!(c["relation"], "<");
    }
    let algebra = std::fs::read_to_string(dir.path().join("brackets/algebra.csv")).unwrap();
    assert_eq!(
        algebra.lines().next().unwrap(),
        "state,bracket_family,mu,nu,value,expected,abs_error"
    );
    // 100 states x 6 families x 4 index pairs
    assert_eq!(algebra.lines().count(), 1 + 100 * 6 * 4);
    let text = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(text.contains("[PASS] brackets"));
}

#[test]
fn gauge_suite_reports_flat_pure_gauge_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let out = dualchart(&["--suite", "gauge", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("ok   pure_gauge_max_curvature"), "{stdout}");
    let s = summary(dir.path());
    let files: Vec<&str> = s["suites"][0]["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap())
        .collect();
    assert!(files.contains(&"gauge/curvature_pure_gauge.csv"));
    for f in files {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn out_flag_beats_environment_which_beats_config() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let out = dualchart(
        &["--suite", "brackets", "--out", flag_dir.path().to_str().unwrap()],
        Some(env_dir.path()),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_dir.path().join("summary.json").exists());
    assert!(!env_dir.path().join("summary.json").exists());

    let out = dualchart(&["--suite", "brackets"], Some(env_dir.path()));
    assert_eq!(out.status.code(), Some(0));
    assert!(env_dir.path().join("brackets/algebra.csv").exists());
}

#[test]
fn seed_changes_sampled_states_and_is_recorded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    dualchart(
        &[
            "--suite",
            "brackets",
            "--seed",
            "1",
            "--out",
            a.path().to_str().unwrap(),
        ],
        None,
    );
    dualchart(
        &[
            "--suite",
            "brackets",
            "--seed",
            "2",
            "--out",
            b.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(summary(a.path())["seed"], 1);
    let ra = std::fs::read(a.path().join("brackets/algebra.csv")).unwrap();
    let rb = std::fs::read(b.path().join("brackets/algebra.csv")).unwrap();
    assert_ne!(ra, rb);
}

#[test]
fn failing_check_gives_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rough.toml");
    // curvature error 1 - cos(ka) = 1.1e-2 exceeds its bound
    let text = DEFAULT_CONFIG.replace("wavevector = 0.6", "wavevector = 3.0");
    assert_ne!(text, DEFAULT_CONFIG);
    std::fs::write(&cfg, text).unwrap();
    let out = dualchart(
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--suite",
            "gauge",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    let s = summary(dir.path());
    assert_eq!(s["passed"], false);
    let check = s["suites"][0]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "curvature_error")
        .unwrap()
        .clone();
    assert_eq!(check["passed"], false);
}
