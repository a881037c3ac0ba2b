use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spc_relay::geom::Vec3;
use spc_relay::planner::DecisionVariables;
use spc_relay::scenario::default_scenario;
use spc_relay::secrecy::east;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spc-relay"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn initial_scheme_writes_one_trace_row() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write(dir.path(), "s.toml", "");
    let out = dir.path().join("out");
    let o = run(&["run", path(&scen), "--scheme", "initial", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "iteration,east");
    assert_eq!(lines.len(), 2);
    let profiles = fs::read_to_string(out.join("profiles.csv")).unwrap();
    assert_eq!(
        profiles.lines().next().unwrap(),
        "slot,x,y,z,v_xy,v_z,p_a,p_r,l_u,l_d,r_u_fbl,r_d_fbl,r_u_inf,r_d_inf,b_s"
    );
    assert_eq!(profiles.lines().count(), 101);
}

#[test]
fn jtrd_artifacts_are_consistent_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write(dir.path(), "s.toml", "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["run", path(&scen), "--out", path(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["trace.csv", "profiles.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }

    let result: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("result.json")).unwrap()).unwrap();
    let reported = result["east"].as_f64().unwrap();
    assert!((58.0..=88.0).contains(&reported), "{reported}");

    let profiles = fs::read_to_string(a.join("profiles.csv")).unwrap();
    let rows: Vec<Vec<f64>> = profiles
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 100);
    let dv = DecisionVariables {
        q: rows.iter().map(|r| Vec3::new(r[1], r[2], r[3])).collect(),
        p_a: rows.iter().map(|r| r[6]).collect(),
        p_r: rows.iter().map(|r| r[7]).collect(),
        l_u: rows.iter().map(|r| r[8]).collect(),
        l_d: rows.iter().map(|r| r[9]).collect(),
        tau: vec![0.0; rows.len()],
    };
    let recomputed = east(&default_scenario(), &dv).unwrap();
    assert!((recomputed - reported).abs() <= 1e-6 * reported, "{recomputed} vs {reported}");
}

#[test]
fn invalid_scenario_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write(dir.path(), "s.toml", "h_min = 150.0\nh_max = 100.0\n");
    for args in [vec!["verify", path(&scen)], vec!["run", path(&scen), "--out", path(dir.path())]] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2));
        let err: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
        assert_eq!(err["exit_code"], 2);
    }
    let o = run(&["run", path(&dir.path().join("missing.toml"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_reports_zero_margin_without_uncertainty() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write(dir.path(), "s.toml", "eve_uncertainty = 0.0\n");
    let o = run(&["verify", path(&scen), "--eve-samples", "1000"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    let audit = text.lines().find(|l| l.starts_with("bound: sampled Eve audit")).unwrap();
    assert!(audit.contains("PASS") && audit.contains("margin 0e0"), "{audit}");
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write(dir.path(), "s.toml", "mission_time = 80.0\n");
    let spec = write(
        dir.path(),
        "sweep.toml",
        "key = \"l_max\"\nvalues = [100, 200]\nschemes = [\"initial\", \"tdfr\"]\n",
    );
    let out = dir.path().join("out");
    let o = run(&["sweep", path(&scen), path(&spec), "--out", path(&out), "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "value,scheme,east,iterations,converged,wall_time_s,error");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("100,initial,"), "{}", lines[1]);
    assert!(out.join("cells").join("l_max=200_tdfr.json").exists());
}

#[test]
fn empty_scheme_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write(dir.path(), "s.toml", "");
    let spec = write(dir.path(), "sweep.toml", "key = \"l_max\"\nvalues = [100]\nschemes = []\n");
    let o = run(&["sweep", path(&scen), path(&spec), "--out", path(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
}
