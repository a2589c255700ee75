use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn onevar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onevar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

/// `[1]p1 -> [2]p1` is refuted at (0,0): p1 holds there and nowhere else.
const MODEL: &str = r#"{
  "factors": [
    {"worlds": 1, "edges": [[0, 0]]},
    {"worlds": 2, "edges": [[0, 0], [0, 1], [1, 1]]}
  ],
  "valuation": {"p1": [[0, 0]]},
  "point": [0, 0]
}"#;

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", MODEL);

    let out = onevar(&["check", &model, "[1]p1 -> [2]p1"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["holds"], false);

    let out = onevar(&["check", &model, "p1 | ~p1", "--format", "text"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "true\n");

    let out = onevar(&["check", &model, "F"]);
    assert_eq!(code(&out), 1);

    let out = onevar(&["check", &model, "p1", "--sat-set"]);
    assert_eq!(stdout_json(&out)["sat_set"], serde_json::json!([[0, 0]]));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{bad");
    assert_eq!(code(&onevar(&["check", &bad, "p1"])), 2);

    let model = write(dir.path(), "m.json", MODEL);
    assert_eq!(code(&onevar(&["check", &model, "p1 &"])), 2);
    assert_eq!(code(&onevar(&["check", &model, "[3]p1"])), 2);
    assert_eq!(code(&onevar(&["translate", "p1", "--variant", "nope"])), 2);
    assert_eq!(code(&onevar(&["frobnicate"])), 2);
}

#[test]
fn zero_budget_is_a_usage_error() {
    assert_eq!(code(&onevar(&["search", "p1", "--max-worlds", "0"])), 2);
    assert_eq!(code(&onevar(&["search", "p1", "--max-candidates", "0"])), 2);
    assert_eq!(code(&onevar(&["calibrate", "--max-worlds", "0"])), 2);
}

#[test]
fn search_found_and_certified_none() {
    let out = onevar(&["search", "[1]p1 -> [2]p1", "--max-worlds", "2"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["outcome"], "found");

    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "found.json", &v["model"].to_string());
    assert_eq!(code(&onevar(&["check", &model, "[1]p1 -> [2]p1"])), 1);

    let out = onevar(&["search", "[1][2]p1 -> [2][1]p1", "--max-worlds", "2"]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["outcome"], "none");
    assert_eq!(v["certified"], true);
}

#[test]
fn search_is_deterministic() {
    let args = ["search", "<1>p1 & <1>~p1 -> <2>p1", "--max-worlds", "2", "--seed", "7"];
    assert_eq!(onevar(&args).stdout, onevar(&args).stdout);
}

#[test]
fn transfer_then_extract() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", MODEL);
    let out = onevar(&["transfer", &model, "[1]p1 -> [2]p1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["variant"], "composite-w0-guard");
    assert_eq!(v["verification"]["refutes_reduction"], true);
    assert_eq!(v["star"]["violations"], serde_json::json!([]));

    let reduced = write(dir.path(), "reduced.json", &v["model"].to_string());
    let out = onevar(&["extract", &reduced, "[1]p1 -> [2]p1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let extracted = write(dir.path(), "x.json", &stdout_json(&out)["model"].to_string());
    assert_eq!(code(&onevar(&["check", &extracted, "[1]p1 -> [2]p1"])), 1);
}

#[test]
fn transfer_of_a_non_countermodel_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", MODEL);
    assert_eq!(code(&onevar(&["transfer", &model, "p1"])), 2);
}

#[test]
fn translate_metrics_and_forms() {
    let out = onevar(&["translate", "[1]p1 -> p1"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!(v["reduction"].as_str().unwrap().starts_with("A -> "));
    assert!(v["definitions"]["B"].is_string());
    let m = &v["metrics"]["reduction"];
    assert!(m["tree_size"].as_u64() > m["dag_size"].as_u64());
    assert_eq!(m["variables"], serde_json::json!([0]));

    let out = onevar(&["translate", "[1]p1 -> p1", "--expand"]);
    let v = stdout_json(&out);
    assert!(v.get("definitions").is_none());
    assert!(!v["reduction"].as_str().unwrap().contains('A'));
}

#[test]
fn calibrate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = onevar(&["calibrate", "--max-worlds", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["selected"], "composite-w0-guard");
    assert_eq!(v["verdicts"].as_array().unwrap().len(), 8);
}

#[test]
fn suite_passes_on_small_input() {
    let out = onevar(&[
        "suite",
        "[1]p1 -> [2]p1",
        "--max-worlds",
        "2",
        "--reduction-max-worlds",
        "2",
        "--reduction-candidates",
        "1000",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["transfer"]["passed"], 1);
}

#[test]
fn bench_sizes_are_deterministic() {
    let out = onevar(&["bench", "--sizes-only", "--max-depth", "2"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "depth,guard_tree_size,guard_dag_size,guard_modal_depth");
    assert_eq!(lines.len(), 4);
    let dags: Vec<u64> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(dags[1] - dags[0], dags[2] - dags[1]);
}
