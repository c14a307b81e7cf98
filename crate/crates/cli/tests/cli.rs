use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn hamcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamcap"))
        .args(args)
        .env_remove("HAMCAP_SEED")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hamcap-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn counterexample_reports_no_orbits() {
    let out = scratch("counterexample");
    let o = hamcap(&["orbits", "--preset", "counterexample", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 orbits at density 64"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("orbits.json")).unwrap()).unwrap();
    assert_eq!(json["isolated"].as_array().unwrap().len(), 0);
    assert_eq!(json["density"], 64);
}

#[test]
fn torus_reruns_are_byte_identical() {
    let (a, b) = (scratch("torus-a"), scratch("torus-b"));
    for dir in [&a, &b] {
        let o = hamcap(&["orbits", "--preset", "torus", "--grid", "16", "--out", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).contains("count is even: ok"));
    }
    for file in ["orbits.json", "orbits.csv", "phase.svg"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn profiles_sample_count_and_intercepts() {
    let out = scratch("profiles");
    let o = hamcap(&["profiles", "--preset", "annulus", "--samples", "101", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("intercepts match actions to 1e-8: yes"));
    let csv = fs::read_to_string(out.join("profiles.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
    assert_eq!(csv.lines().next().unwrap(), "p,H,H0,H1,l1,l2,l3,l4");
    let svg = fs::read_to_string(out.join("profiles.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("l4"));
}

#[test]
fn pair_orbits_land_in_their_windows() {
    let out = scratch("pair");
    let o = hamcap(&["orbits", "--preset", "annulus", "--grid", "16", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains(": ok"));
}

#[test]
fn lagrangian_capacity_has_no_upper_witness() {
    let out = scratch("lagrangian");
    let o = hamcap(&["capacity", "--preset", "lagrangian", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("no upper witness found <= c_max"));
    let cp: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("cp.json")).unwrap()).unwrap();
    assert_eq!(cp["vacuous"], true);
}

#[test]
fn invalid_bracket_exits_2() {
    let dir = scratch("bracket");
    fs::create_dir_all(&dir).unwrap();
    let o = hamcap(&["config", "annulus"]);
    let mut cfg: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // orbits already exist at the bottom of the bracket
    cfg["capacity"]["bracket"] = serde_json::json!([0.7, 0.9]);
    cfg["out"] = dir.join("out").to_str().unwrap().into();
    let path = dir.join("run.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let o = hamcap(&["capacity", "--config", path.to_str().unwrap(), "--grid", "16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid bracket"));
}

#[test]
fn bad_input_exits_2() {
    assert_eq!(hamcap(&["orbits", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(hamcap(&["orbits", "--preset", "torus", "--grid", "0"]).status.code(), Some(2));
    assert_eq!(hamcap(&["capacity", "--preset", "torus"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_hamcap"))
        .args(["orbits", "--preset", "counterexample"])
        .env("HAMCAP_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_preset_prints_a_loadable_config() {
    let o = hamcap(&["presets"]);
    let names = stdout(&o);
    assert!(names.lines().count() >= 9);
    for name in names.lines() {
        let o = hamcap(&["config", name]);
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["name"], name);
    }
}
