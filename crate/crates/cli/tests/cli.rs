use std::path::PathBuf;
use std::process::{Command, Output};

fn racg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_racg")).args(args).output().expect("binary runs")
}

fn racg_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_racg")).args(args).env("RACG_THREADS", threads).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("racg-cli-{}-{}", name, std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn normalize_cancels() {
    let v = json(&racg(&["word", "normalize", "--nerve", "pentagon", "--word", "a a"]));
    assert_eq!(v["result"]["normal_form"], "ε");
    assert_eq!(v["schema_version"], "1");
    assert_eq!(v["config"]["radius"], 12);
    assert_eq!(v["config"]["tol"], 1e-9);
}

#[test]
fn exit_codes() {
    assert_eq!(racg(&["word", "normalize", "--nerve", "pentagon", "--word", "a"]).status.code(), Some(0));
    assert_eq!(racg(&["word", "normalize", "--nerve", "pentagon", "--word", "a z"]).status.code(), Some(1));
    assert_eq!(racg(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(racg(&["word", "normalize", "--word", "a"]).status.code(), Some(2));
    assert_eq!(racg(&["word", "ball", "--nerve", "pentagon", "--r", "13"]).status.code(), Some(1));
    let bad = racg(&["rep", "random", "--nerve", "pentagon", "--range", "2/0"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("range"));
    let csv = racg(&["word", "normalize", "--nerve", "pentagon", "--word", "a", "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(2));
}

#[test]
fn config_file_then_flags() {
    let d = scratch("cfg");
    let p = d.join("run.json");
    std::fs::write(&p, r#"{"nerve": "pentagon", "seed": 3}"#).unwrap();
    let o = racg(&["rep", "random", "--config", p.to_str().unwrap(), "--seed", "5"]);
    let v = json(&o);
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["seeds"]["cartan"], 5);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("seed") && err.contains('3') && err.contains('5'), "{}", err);
    std::fs::write(&p, r#"{"nerve": "pentagon", "bogus": 1}"#).unwrap();
    assert_eq!(racg(&["rep", "random", "--config", p.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(racg(&["rep", "random", "--config", "/nonexistent/x.json"]).status.code(), Some(2));
    std::fs::remove_dir_all(d).unwrap();
}

#[test]
fn random_cartan_round_trips() {
    let d = scratch("rt");
    let p = d.join("a.json");
    let o = racg(&["rep", "random", "--nerve", "pentagon", "--seed", "2", "--out", p.to_str().unwrap()]);
    assert!(o.status.success());
    let v = json(&racg(&["rep", "check", "--nerve", "pentagon", "--cartan", p.to_str().unwrap()]));
    assert_eq!(v["result"]["valid"], true);
    assert_eq!(v["result"]["fully_nondegenerate"], true);
    std::fs::remove_dir_all(d).unwrap();
}

#[test]
fn unipotent_fit_from_csv() {
    let d = scratch("fit");
    let p = d.join("u.csv");
    let ps = p.to_str().unwrap();
    let args = ["gaps", "trace", "--nerve", "dihedral", "--cartan", "geometric", "--word", "st", "--power", "1024"];
    let o = racg(&[&args[..], &["--format", "csv", "--out", ps]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("# schema_version=1"));
    assert_eq!(text.lines().nth(1), Some("n,length,mu1,mu2,gap12"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("u.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "gaps trace");
    let v = json(&racg(&["gaps", "fit", "--trace", ps]));
    assert!(v["result"]["fit"]["a"].as_f64().unwrap() < 0.01);
    std::fs::remove_dir_all(d).unwrap();
}

#[test]
fn appendix_a1_certifies() {
    let v = json(&racg(&["appendix", "a1", "--k", "1", "--format", "json"]));
    assert_eq!(v["result"]["certified"], true);
    assert_eq!(v["seeds"]["cartan"], 1);
}

#[test]
fn hilbert_interval() {
    let d = scratch("hil");
    let p = d.join("cone.json");
    std::fs::write(&p, r#"[["-1", "1"], ["1", "1"]]"#).unwrap();
    let v = json(&racg(&["hilbert", "dist", "--cone", p.to_str().unwrap(), "--x", "0,1", "--y", "1/2,1"]));
    let got = v["result"]["distance"].as_f64().unwrap();
    assert!((got - 0.5 * 3f64.ln()).abs() < 1e-12);
    let v = json(&racg(&["hilbert", "dist", "--ball", "--x", "0,0", "--y", "0.5,0"]));
    assert!((v["result"]["distance"].as_f64().unwrap() - 0.5 * 3f64.ln()).abs() < 1e-12);
    std::fs::remove_dir_all(d).unwrap();
}

const RUNS: &[&[&str]] = &[
    &["nerve", "validate", "--nerve", "fig-a1"],
    &["word", "ball", "--nerve", "fig-a1", "--r", "4"],
    &["walls", "decompose", "--nerve", "fig-a1", "--word", "bdbdeacac"],
    &["walls", "extensions", "--nerve", "fig-a1", "--word", "bdeac"],
    &["gaps", "pairwise", "--nerve", "pentagon", "--word", "acebdacebd"],
    &["gaps", "scan", "--nerve", "pentagon", "--seeds", "1,2", "--count", "8", "--length", "16"],
    &[
        "halfcone", "probe", "--nerve", "pentagon", "--wall1", ":a", "--wall2", "acebd:a", "--depth", "3", "--format",
        "csv",
    ],
    &["appendix", "a2", "--seed", "2"],
];

#[test]
fn byte_identical_across_runs_and_threads() {
    for args in RUNS {
        let base = racg_threads(args, "1");
        assert!(base.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&base.stderr));
        for t in ["1", "4"] {
            assert_eq!(stdout(&base), stdout(&racg_threads(args, t)), "{:?} with {} threads", args, t);
        }
        let flag = racg(&[&args[..], &["--threads", "3"]].concat());
        assert_eq!(stdout(&base), stdout(&flag), "{:?} with --threads", args);
    }
}
