use std::path::Path;
use std::process::Command;

use rulesched::harness::{read_comparison_csv, read_report_csv, COMPARISON_HEADER, REPORT_HEADER};

mod common;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rulesched"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_then_enumerate_planted() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let (code, _, err) = run(&["gen", "--nurses", "6", "--mode", "planted", "--seed", "7", "--out", p(&inst)]);
    assert_eq!(code, 0, "{err}");
    let (code, out, _) = run(&["enumerate", "--instance", p(&inst)]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next().unwrap(), "optimum 0");
}

#[test]
fn missing_instance_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["solve", "--instance", "missing.json", "--algo", "boa", "--out", p(dir.path())]);
    assert_eq!(code, 2);
    assert!(err.contains("missing.json"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["solve", "--bogus"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    let (code, _, err) = run(&["solve", "--instance", "x.json", "--algo", "fixed:9", "--out", "o"]);
    assert_eq!(code, 1);
    assert!(err.contains("fixed:9"));
    assert_eq!(run(&["compare", "--out", "x.csv", "--budget", "10"]).0, 1);
}

#[test]
fn invalid_instance_reports_field() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("bad.json");
    std::fs::write(
        &inst,
        r#"{ "days": 1, "shifts_per_day": 1, "demand": [[1]],
            "nurses": [ { "patterns": [ { "cover": [1], "cost": -1 } ] } ] }"#,
    )
    .unwrap();
    let (code, _, err) = run(&["enumerate", "--instance", p(&inst)]);
    assert_eq!(code, 2);
    assert!(err.contains("nurses[0].patterns[0].cost"), "{err}");
}

#[test]
fn enumerate_budget_guard() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    run(&["gen", "--nurses", "7", "--patterns-per-nurse", "10", "--out", p(&inst)]);
    let (code, _, err) = run(&["enumerate", "--instance", p(&inst)]);
    assert_eq!(code, 2);
    assert!(err.contains("10000000"), "{err}");
}

#[test]
fn solve_writes_report_and_solution() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    run(&["gen", "--nurses", "8", "--seed", "3", "--out", p(&inst)]);
    let out = dir.path().join("run");
    let (code, _, err) = run(&[
        "solve", "--instance", p(&inst), "--algo", "boa+lcs", "--seed", "11", "--budget", "3000",
        "--out", p(&out), "--dump-strengths",
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), REPORT_HEADER);
    let records = read_report_csv(text.as_bytes()).unwrap();
    assert!(records.last().unwrap().evaluations <= 3000);
    assert!(records.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    assert_eq!(doc["seed"], 11);
    assert_eq!(doc["algorithm"], "boa+lcs");
    assert_eq!(doc["rule_string"].as_array().unwrap().len(), 8);
    assert_eq!(doc["total"].as_f64().unwrap(), records.last().unwrap().best_fitness);
    let strengths = std::fs::read_to_string(out.join("strengths.txt")).unwrap();
    assert_eq!(strengths.lines().count(), 8);
}

#[test]
fn compare_rows_and_fixed_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("worked.json");
    std::fs::write(&inst, common::worked_instance().to_json()).unwrap();
    let out = dir.path().join("cmp.csv");
    let (code, _, err) = run(&[
        "compare", "--instance", p(&inst), "--algos", "fixed:0,random", "--seeds", "2,1",
        "--budget", "200", "--out", p(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), COMPARISON_HEADER);
    let rows = read_comparison_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4);
    let keys: Vec<(&str, u64)> = rows.iter().map(|r| (r.algorithm.as_str(), r.seed)).collect();
    assert_eq!(keys, vec![("fixed:0", 1), ("fixed:0", 2), ("random", 1), ("random", 2)]);
    assert!(rows.iter().filter(|r| r.algorithm == "fixed:0").all(|r| r.best_fitness == 10.0));
    assert!(rows.iter().filter(|r| r.algorithm == "random").all(|r| r.evaluations == 200));
}

#[test]
fn compare_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{ "instances": [ { "generate": { "nurses": 4, "mode": "planted", "seed": 2 } } ],
             "algorithms": ["boa", "fixed:3"], "seeds": [5], "budget": 400,
             "boa": { "population_size": 20 } }"#,
    )
    .unwrap();
    let out = dir.path().join("cmp.csv");
    let (code, _, err) = run(&["compare", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let rows = read_comparison_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.evaluations <= 400 && r.wall_time_ms == 0));
    assert!(rows[0].instance.starts_with("gen-planted-n4"));
}
