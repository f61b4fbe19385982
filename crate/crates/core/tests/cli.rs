use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use srr::numeric::parse_rational;
use srr::routing::{is_feasible_with_strategy, DemandVector, SplittingStrategy, Tolerances};
use srr::storage::{enumerate_repair_groups, StorageSystem};
use tempfile::TempDir;

fn srr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srr")).args(args).env_remove("SRR_MODE").output().unwrap()
}

fn spec(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn groups_of_example_one() {
    let dir = TempDir::new().unwrap();
    let s = spec(&dir, "ex1.json", r#"{"K": 2, "systematic": [2, 1], "coded": 1, "layout": ["1", "1", "c", "2"]}"#);
    let out = srr(&["groups", p(&s)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "f1 (gamma=3): {1},{2},{3,4}\nf2 (gamma=3): {4},{1,3},{2,3}\n");
}

#[test]
fn groups_warn_when_nothing_recoverable() {
    let dir = TempDir::new().unwrap();
    let s = spec(&dir, "dead.json", r#"{"K": 3, "systematic": [0, 0, 0], "coded": 2}"#);
    let out = srr(&["groups", p(&s)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no file recoverable"));
    assert!(stdout(&out).contains("f3 (gamma=0): \n"));
}

#[test]
fn groups_include_all_coded_group() {
    let dir = TempDir::new().unwrap();
    let s = spec(&dir, "w.json", r#"{"K": 3, "systematic": [3, 1, 1], "coded": 3}"#);
    let out = srr(&["groups", p(&s)]);
    let text = stdout(&out);
    let f3 = text.lines().nth(2).unwrap();
    assert!(f3.contains("{6,7,8}"), "{f3}");
    assert!(f3.starts_with("f3 (gamma=23): {5},"), "{f3}");
}

#[test]
fn bad_spec_reports_position() {
    let dir = TempDir::new().unwrap();
    let s = spec(&dir, "bad.json", "{\"K\": 2,\n  \"systematic\": [1, 1],\n  \"coded\": \"x\"}");
    let out = srr(&["groups", p(&s)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("bad.json:3:"), "{err}");

    let s = spec(&dir, "extra.json", r#"{"K": 2, "systematic": [1, 1], "coded": 1, "colour": 1}"#);
    assert_eq!(srr(&["groups", p(&s)]).status.code(), Some(2));
    assert_eq!(srr(&["groups", "/nonexistent/x.json"]).status.code(), Some(2));
}

#[test]
fn feasible_exit_codes() {
    let dir = TempDir::new().unwrap();
    let s = spec(&dir, "ac.json", r#"{"K": 3, "systematic": [0, 0, 0], "coded": 3}"#);
    assert_eq!(srr(&["feasible", p(&s), "1/3", "1/3", "1/3"]).status.code(), Some(0));
    assert_eq!(srr(&["feasible", p(&s), "1", "1", "1"]).status.code(), Some(1));
    assert_eq!(srr(&["feasible", p(&s), "1", "1"]).status.code(), Some(2));
    assert_eq!(srr(&["feasible", p(&s), "-1", "0", "0"]).status.code(), Some(2));
    assert_eq!(srr(&["feasible", p(&s), "1/3", "1/3", "1/3", "--mode", "float"]).status.code(), Some(0));
    assert_eq!(srr(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn witness_file_replays() {
    let dir = TempDir::new().unwrap();
    let body = r#"{"K": 3, "systematic": [3, 1, 1], "coded": 3}"#;
    let s = spec(&dir, "w.json", body);
    let witness = dir.path().join("witness.json");
    let out = srr(&["feasible", p(&s), "1.5", "2", "1.5", "--out", p(&witness)]);
    assert_eq!(out.status.code(), Some(0));

    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&witness).unwrap()).unwrap();
    let alpha: Vec<Vec<_>> = doc["alpha_exact"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row.as_array().unwrap().iter().map(|v| parse_rational(v.as_str().unwrap()).unwrap()).collect())
        .collect();
    let sys = StorageSystem::mds_core(&[3, 1, 1], 3, srr::numeric::int(1)).unwrap();
    let table = enumerate_repair_groups(&sys);
    let demand =
        DemandVector::new(vec![parse_rational("1.5").unwrap(), parse_rational("2").unwrap(), parse_rational("1.5").unwrap()]).unwrap();
    let strategy = SplittingStrategy::new(alpha);
    assert!(is_feasible_with_strategy(&table, &strategy, &demand, sys.mu(), &Tolerances::exact()).unwrap());

    let rounded: SplittingStrategy = serde_json::from_value(doc["alpha"].clone()).unwrap();
    assert!(is_feasible_with_strategy(
        &table,
        &rounded,
        &demand,
        sys.mu(),
        &Tolerances { norm: srr::numeric::ratio(1, 1_000_000_000), feas: srr::numeric::ratio(1, 1_000_000_000) }
    )
    .unwrap());
}

#[test]
fn maximize_methods() {
    let dir = TempDir::new().unwrap();
    let w = spec(&dir, "w.json", r#"{"K": 3, "systematic": [3, 1, 1], "coded": 3}"#);
    let out = srr(&["maximize", p(&w), "1.5", "2", "--method", "all"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "lp: 1.5\nclosed: 1.5\ngreedy: 1.5\nagree\n");

    let ac = spec(&dir, "ac.json", r#"{"K": 3, "systematic": [0, 0, 0], "coded": 3}"#);
    let out = srr(&["maximize", p(&ac), "0.2", "0.3", "--method", "closed"]);
    assert_eq!(stdout(&out), "0.5\n");

    let five = spec(&dir, "five.json", r#"{"K": 3, "systematic": [5, 0, 0], "coded": 3}"#);
    assert_eq!(srr(&["maximize", p(&five), "0", "0", "--method", "closed"]).status.code(), Some(3));
    assert_eq!(srr(&["maximize", p(&five), "0", "0"]).status.code(), Some(0));

    let out = srr(&["maximize", p(&ac), "1", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out), "not in region\n");

    let trace = dir.path().join("trace.jsonl");
    let out = srr(&["maximize", p(&w), "1.5", "2", "--method", "greedy", "--trace", p(&trace)]);
    assert_eq!(stdout(&out), "1.5\n");
    let lines = std::fs::read_to_string(&trace).unwrap();
    assert!(lines.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(lines.lines().last().unwrap().contains("\"phase\":\"tail\""));
}

#[test]
fn mode_from_environment() {
    let dir = TempDir::new().unwrap();
    let w = spec(&dir, "w.json", r#"{"K": 3, "systematic": [1, 1, 1], "coded": 3}"#);
    let out = Command::new(env!("CARGO_BIN_EXE_srr")).args(["maximize", p(&w), "0.5", "0.5"]).env("SRR_MODE", "float").output().unwrap();
    assert_eq!(stdout(&out), "2.33333333333\n");
    let out = Command::new(env!("CARGO_BIN_EXE_srr")).args(["maximize", p(&w), "0.5", "0.5"]).env("SRR_MODE", "bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn region_exports() {
    let dir = TempDir::new().unwrap();
    let tri = spec(&dir, "tri.json", r#"{"K": 2, "systematic": [1, 1], "coded": 1, "layout": ["1", "c", "2"]}"#);
    let svg = dir.path().join("tri.svg");
    let out = srr(&["region", p(&tri), "--step", "0.25", "--format", "svg", "--out", p(&svg)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "samples: 9, max L: 2\n");
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains(r#"<polygon points="60,540 380,540 60,220""#), "{text}");

    let ac = spec(&dir, "ac.json", r#"{"K": 3, "systematic": [0, 0, 0], "coded": 3, "grid_step": 0.5}"#);
    let out = srr(&["region", p(&ac), "--format", "csv"]);
    let csv = stdout(&out);
    assert!(csv.starts_with("lambda_1,lambda_2,L,source,case_label\n0,0,1,LP,case1\n"), "{csv}");
    assert_eq!(csv.lines().count(), 7);

    let four = spec(&dir, "four.json", r#"{"K": 4, "systematic": [0, 0, 0, 0], "coded": 4}"#);
    let out = srr(&["region", p(&four), "--step", "1", "--format", "svg"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported format"));
}

#[test]
fn validate_reports_cases() {
    let dir = TempDir::new().unwrap();
    let ac = spec(&dir, "ac.json", r#"{"K": 3, "systematic": [0, 0, 0], "coded": 3}"#);
    let out = srr(&["validate", p(&ac), "--step", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("max discrepancy: 0\nmismatches: 0\n"), "{text}");
    assert!(text.contains("case1: "), "{text}");
}
