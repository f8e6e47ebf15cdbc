use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn fpk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpk")).args(args).output().expect("run fpk")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect()
}

#[test]
fn validate_accepts_and_rejects() {
    let ok = fpk(&["validate", s(&config("heat.cfg"))]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let report: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!(report["config_hash"].is_string());

    let bad = fpk(&["validate", s(&config("bad_sign_c.cfg"))]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("positive_c"));
}

#[test]
fn check_certifies_the_degenerate_interval() {
    let out = fpk(&["check", s(&config("interval_degenerate.cfg"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["all_hold"], Value::Bool(true));
    assert_eq!(report["certificates"].as_array().unwrap().len(), 4);
}

#[test]
fn heat_solve_keeps_mass_and_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let r = fpk(&["solve", s(&config("heat.cfg")), "--out", s(out)]);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let mass = csv_rows(&a.join("mass.csv"));
    let last = mass.last().unwrap();
    assert_eq!(last[0], 0.5);
    assert!((last[1] - 1.0).abs() <= 1e-6, "{last:?}");
    assert_eq!(fs::read(a.join("density.csv")).unwrap(), fs::read(b.join("density.csv")).unwrap());
    assert_eq!(fs::read(a.join("mass.csv")).unwrap(), fs::read(b.join("mass.csv")).unwrap());
    let meta: Value = serde_json::from_slice(&fs::read(a.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["version"], 1);
    assert_eq!(meta["command"], "solve");
}

#[test]
fn resolved_json_config_gives_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("killing.cfg")).unwrap();
    let json = fpk_core::config::RunConfig::parse(&text).unwrap().to_json();
    let resolved = dir.path().join("killing.json");
    fs::write(&resolved, json).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(fpk(&["solve", s(&config("killing.cfg")), "--out", s(&a)]).status.code(), Some(0));
    assert_eq!(fpk(&["solve", s(&resolved), "--out", s(&b)]).status.code(), Some(0));
    for f in ["density.csv", "mass.csv", "metadata.json"] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        if f == "metadata.json" {
            // same content apart from the config path
            let (mut x, mut y): (Value, Value) = (serde_json::from_slice(&x).unwrap(), serde_json::from_slice(&y).unwrap());
            x["config"] = Value::Null;
            y["config"] = Value::Null;
            assert_eq!(x, y);
        } else {
            assert_eq!(x, y, "{f}");
        }
    }
}

#[test]
fn monte_carlo_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (pde, mc, mc2) = (dir.path().join("pde"), dir.path().join("mc"), dir.path().join("mc2"));
    assert_eq!(fpk(&["solve", s(&config("heat.cfg")), "--out", s(&pde)]).status.code(), Some(0));
    let r = fpk(&["mc", s(&config("heat.cfg")), "--seed", "5", "--out", s(&mc)]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let r = fpk(&["--threads", "1", "mc", s(&config("heat.cfg")), "--seed", "5", "--out", s(&mc2)]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(fs::read(mc.join("mc_hist.csv")).unwrap(), fs::read(mc2.join("mc_hist.csv")).unwrap());

    let rows = csv_rows(&mc.join("mc.csv"));
    assert!(rows.iter().all(|r| r[1] + r[2] + r[3] == 1.0));
    let r = fpk(&["compare", s(&pde), s(&mc)]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let cmp = csv_rows(&mc.join("compare.csv"));
    assert_eq!(cmp.len(), 11);
    assert!(cmp.iter().all(|r| r[1] <= 0.02));
}

#[test]
fn ergodic_writes_the_cesaro_table() {
    let dir = tempfile::tempdir().unwrap();
    let r = fpk(&["ergodic", s(&config("ou.cfg")), "--t-end", "5", "--out", s(dir.path())]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(dir.path().join("ergodic.csv")).unwrap();
    assert!(text.starts_with("t,l1_to_stationary,sigma_mass\n"));
    let rows = csv_rows(&dir.path().join("ergodic.csv"));
    assert!(rows.len() >= 100);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 5.0);
    assert!(last[1] < rows[rows.len() / 10][1]);
    assert!((last[2] - 1.0).abs() < 1e-9);
}

#[test]
fn errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fpk(&["validate", "/nonexistent/config.cfg"]).status.code(), Some(2));
    let broken = dir.path().join("broken.cfg");
    fs::write(&broken, "[domain]\nkind = interval\nlower = 1\nupper = -1\n").unwrap();
    let r = fpk(&["validate", s(&broken)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!r.stderr.is_empty());
    // --seed is required
    assert_eq!(fpk(&["mc", s(&config("heat.cfg")), "--out", s(dir.path())]).status.code(), Some(2));
    // the grid solver is one-dimensional
    assert_eq!(fpk(&["solve", s(&config("rd_example_d2.cfg")), "--out", s(dir.path())]).status.code(), Some(2));
    // compare needs both directories
    assert_eq!(fpk(&["compare", s(dir.path()), s(dir.path())]).status.code(), Some(2));
}
