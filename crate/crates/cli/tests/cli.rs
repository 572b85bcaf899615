use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qrefl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrefl")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn verify_golden_passes() {
    let out = qrefl(&["verify", "appendixD", "--n", "3", "--J", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json_of(&out);
    assert_eq!(rep["suite"], "appendixD");
    assert_eq!(rep["checks"][0]["status"], "pass");
    assert!(rep["elapsed_ms"].is_u64());
}

#[test]
fn verify_ybe_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ybe.json");
    let out = qrefl(&["verify", "ybe", "--n", "3", "--I", "1", "--J", "2", "--K", "2", "--points", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rep = read_json(&path);
    let check = &rep["checks"][0];
    assert_eq!(check["id"], "ybe");
    assert_eq!(check["points_passed"], 3);
    assert_eq!(check["params"]["K"], "2");
}

#[test]
fn invalid_config_exits_2() {
    assert_eq!(qrefl(&["verify", "ybe", "--n", "0"]).status.code(), Some(2));
    assert_eq!(qrefl(&["verify", "transfer", "--J", "2", "--I", "1"]).status.code(), Some(2));
    assert_eq!(qrefl(&["verify", "nosuch"]).status.code(), Some(2));
    assert_eq!(qrefl(&["build", "S", "--n", "2", "--q", "2"]).status.code(), Some(2));
    assert_eq!(qrefl(&["simulate", "--q", "2", "--nu", "3", "--right", "left-upper"]).status.code(), Some(2));
}

#[test]
fn perturbation_fails_with_reproducer() {
    let out = qrefl(&["verify", "reflection", "--n", "3", "--perturb", "1:0:1/7", "--points", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let rep = json_of(&out);
    assert_eq!(rep["passed"], false);
    for c in rep["checks"].as_array().unwrap() {
        assert_eq!(c["status"], "fail", "{}", c);
        assert!(!c["witness"]["indices"].as_array().unwrap().is_empty());
        assert!(c["point"]["q"].is_string());
        assert_eq!(c["seed"], 1);
    }
}

#[test]
fn build_k_matches_closed_form() {
    let out = qrefl(&["build", "K", "--family", "right-upper", "--n", "2", "--J", "1", "--q", "2", "--nu", "1/3", "--w", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let m = json_of(&out);
    assert_eq!(m["ordering"], "lex");
    assert_eq!((m["n"].as_u64(), m["I"].as_u64(), m["J"].as_u64()), (Some(2), Some(1), Some(1)));
    assert_eq!(m["params"]["nu"], "1/3");
    // qn = 2/3: [[1, qn(1 - w^2)/(w(1 - qn w))], [0, (w - qn)/(w(1 - qn w))]] at w = 4.
    let entries: Vec<(u64, u64, &str)> = m["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e[0].as_u64().unwrap(), e[1].as_u64().unwrap(), e[2].as_str().unwrap()))
        .collect();
    assert_eq!(entries, vec![(0, 0, "1/1"), (0, 1, "3/2"), (1, 1, "-1/2")]);
}

#[test]
fn build_s_six_vertex_csv() {
    let out = qrefl(&["build", "S", "--n", "2", "--I", "1", "--J", "1", "--q", "2", "--u", "9", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "row,col,value\n0,0,1/1\n1,1,32/35\n1,2,27/35\n2,1,3/35\n2,2,8/35\n3,3,1/1\n");
}

#[test]
fn build_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |p: &str| vec!["build".to_string(), "H".into(), "--N".into(), "3".into(), "--q".into(), "3/2".into(), "--nu".into(), "2/5".into(), "--out".into(), p.to_string()];
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let v = args(p.to_str().unwrap());
        let v: Vec<&str> = v.iter().map(|s| s.as_str()).collect();
        assert_eq!(qrefl(&v).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(read_json(&a)["rows"], 8);
}

#[test]
fn simulate_matches_exact_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = qrefl(&["simulate", "--q", "2", "--nu", "3", "--seed", "11", "--events", "100000", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        p
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let hist = std::fs::read_to_string(a.with_extension("hist.csv")).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next(), Some("state,configuration,occupancy,exact"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let occ: f64 = f[f.len() - 2].parse().unwrap();
        let (num, den) = f[f.len() - 1].split_once('/').unwrap();
        let exact = num.parse::<f64>().unwrap() / den.parse::<f64>().unwrap();
        assert!((occ - exact).abs() < 0.02, "{}", line);
    }
}

#[test]
fn simulate_refuses_negative_rates() {
    let out = qrefl(&["simulate", "--q", "1/2", "--nu", "1/3", "--right", "right-upper"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("negative rates"));
    assert!(err.contains("->"));
}
