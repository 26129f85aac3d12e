use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hyperroute"));
    cmd.args(args).env("HYPERROUTE_COMMIT", "test").env_remove("HYPERROUTE_OUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn hyperroute")
}

fn ok(args: &[&str]) -> String {
    let o = run(args, &[]);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn build_then_spectrum_certifies_fano() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("fano.txt");
    ok(&["build", "--kind", "projective", "--q", "2", "--output", f.to_str().unwrap()]);
    let v: Value = serde_json::from_str(ok(&["spectrum", f.to_str().unwrap()]).trim()).unwrap();
    assert!((v["beta"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-9);
    assert_eq!(v["ramanujan"], Value::Bool(true));
    assert_eq!(v["N"], 7);
}

#[test]
fn route_from_file_permutation_writes_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let p = dir.path().join("pi.txt");
    let s = dir.path().join("schedule.txt");
    ok(&["build", "--kind", "random-graph", "--n", "20", "--d", "4", "--seed", "1", "--output", g.to_str().unwrap()]);
    let pi: Vec<String> = (0..20).map(|v| ((v + 7) % 20).to_string()).collect();
    std::fs::write(&p, pi.join(" ")).unwrap();
    let out = ok(&["route", "--graph", g.to_str().unwrap(), "--perm", p.to_str().unwrap(), "--schedule", s.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["realized"], Value::Bool(true));
    let steps = std::fs::read_to_string(&s).unwrap().lines().count();
    assert_eq!(v["T"].as_u64().unwrap() as usize, steps);
}

#[test]
fn config_file_with_overrides_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "experiment = overlay_spectral_gain\nseed = 4\ntrials = 2\nsizes = 64\nlayers = 1,2\nformat = json\n").unwrap();
    let a = run(&["run", "--config", cfg.to_str().unwrap(), "--out", "csv"], &[("HYPERROUTE_OUT_DIR", dir.path())]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let written = std::fs::read_to_string(dir.path().join("overlay_spectral_gain.csv")).unwrap();
    assert_eq!(written, String::from_utf8(a.stdout).unwrap());
    assert!(written.contains("# seed: 4\n"));
    assert!(written.contains("# param layers: 1,2\n"));
    let b = run(&["run", "--config", cfg.to_str().unwrap(), "--out", "csv"], &[]);
    assert_eq!(String::from_utf8(b.stdout).unwrap(), written);
}

#[test]
fn json_tables_have_rows() {
    let out = ok(&["adaptive", "--n", "4", "--trials", "2", "--out", "json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["N"], 16);
    assert_eq!(rows[0]["violations"], 0);
}

#[test]
fn unknown_parameters_are_rejected() {
    let o = run(&["run", "mw_selection", "--set", "bogus=1"], &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    assert!(!run(&["run", "no_such_experiment"], &[]).status.success());
}

#[test]
fn recommend_worked_example() {
    let out = ok(&["recommend", "--k0", "256", "--rounds", "10", "--n", "1024", "--pi-unknown", "--json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["strategy"], "MultiLayer");
    assert_eq!(v["predicted_depth"], 20.0);
}

#[test]
fn verify_exit_codes() {
    assert!(ok(&["verify", "--criteria", "1,2"]).contains("2/2 criteria passed"));
    assert!(!run(&["verify", "--criteria", "99"], &[]).status.success());
}
