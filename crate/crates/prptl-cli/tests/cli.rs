//! Contract tests for the command line front end: output shapes, exit
//! statuses, determinism, and the file-input escape hatches.

use std::path::PathBuf;
use std::process::{Command, Output};

fn model(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name);
    path.to_str().expect("utf-8 path").to_string()
}

fn prptl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prptl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn parse_echoes_canonical_formulas_and_queries() {
    let out = prptl(&["parse", "q | p | q"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "p | q\n");

    let out = prptl(&["parse", "Pr >= 0.5 [ X q ]"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "Pr>=1/2 [ X[1,1] q ]\n");
}

#[test]
fn parse_rejects_out_of_range_thresholds_as_usage_errors() {
    let out = prptl(&["parse", "Pr>2 [ p ]"]);
    assert_eq!(code(&out), 2);
    assert_eq!(stdout(&out), "");
    assert!(stderr(&out).contains("threshold"), "stderr: {}", stderr(&out));
}

#[test]
fn malformed_formulas_are_usage_errors_on_stderr() {
    for args in [
        vec!["tnf", "p &"],
        vec!["check", &model("coin.dtmc"), "Pr>=0.5 [ p"],
        vec!["eval", &model("flips.trace"), "X[2,1] p"],
    ] {
        let out = prptl(&args);
        assert_eq!(code(&out), 2, "args: {args:?}");
        assert_eq!(stdout(&out), "", "args: {args:?}");
        assert!(stderr(&out).starts_with("error: "), "args: {args:?}");
    }
}

#[test]
fn missing_and_malformed_files_are_computation_errors() {
    let out = prptl(&["check", "no-such-model.dtmc", "Pr>=0.5 [ q ]"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("no-such-model.dtmc"));

    let dir = std::env::temp_dir().join("prptl-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.dtmc");
    std::fs::write(&bad, "states: 1\ninit: 0 1\ntrans: 0 0 1/2\n").unwrap();
    let out = prptl(&["check", bad.to_str().unwrap(), "Pr>=0.5 [ q ]"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("sums to"), "stderr: {}", stderr(&out));
}

#[test]
fn formula_file_replaces_the_positional_argument() {
    let dir = std::env::temp_dir().join("prptl-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("formula.txt");
    std::fs::write(&path, "p ; X[3,4] q\n").unwrap();
    let out = prptl(&["tnf", "--formula-file", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out),
        "(p & X[3,4] q) | (p & X[1,1] (true ; X[3,4] q))\n"
    );

    let out = prptl(&["tnf"]);
    assert_eq!(code(&out), 2);
    let out = prptl(&["tnf", "p", "--formula-file", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn eval_reports_truth_through_the_exit_status() {
    let trace = model("flips.trace");
    let holds = prptl(&["eval", &trace, "p ; X[1,2] q"]);
    assert_eq!(code(&holds), 0);
    assert_eq!(stdout(&holds), "true\n");

    let fails = prptl(&["eval", &trace, "[] p"]);
    assert_eq!(code(&fails), 1);
    assert_eq!(stdout(&fails), "false\n");
}

#[test]
fn eval_treats_atoms_missing_from_the_trace_as_false() {
    let out = prptl(&["eval", &model("flips.trace"), "<> nosuchatom"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout(&out), "false\n");
}

#[test]
fn check_maps_verdicts_to_exit_statuses() {
    let coin = model("coin.dtmc");
    let holds = prptl(&["check", &coin, "Pr>=0.5 [ X[1,1] q ]"]);
    assert_eq!((stdout(&holds), code(&holds)), ("holds (1/2)\n".into(), 0));

    let fails = prptl(&["check", &coin, "Pr>0.5 [ X[1,1] q ]"]);
    assert_eq!((stdout(&fails), code(&fails)), ("fails (1/2)\n".into(), 1));

    // `=` against a fixpoint approximation cannot be decided.
    let inconclusive = prptl(&["check", &coin, "Pr=1 [ <> q ]"]);
    assert_eq!(code(&inconclusive), 4);
    assert!(stdout(&inconclusive).starts_with("inconclusive ("));
}

#[test]
fn unsupported_mixed_polarity_is_a_computation_error() {
    let out = prptl(&["check", &model("coin.dtmc"), "Pr>=0.5 [ ([] !p) & (<> q) ]"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("polarities"), "stderr: {}", stderr(&out));
}

#[test]
fn exact_prints_the_rational_probability() {
    let out = prptl(&["exact", &model("coin.dtmc"), "X[1,2] q", "--horizon", "5"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "3/4\n");

    let missing_flag = prptl(&["exact", &model("coin.dtmc"), "q"]);
    assert_eq!(code(&missing_flag), 2);
}

#[test]
fn graph_listing_and_dot_are_stable() {
    let out = prptl(&["graph", "empty"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out),
        "node 0: empty @ [0,0]\nnode 1: eps\nedge 0: 0 -[true]-> 1\n"
    );

    let dot = prptl(&["graph", "empty", "--dot"]);
    let text = stdout(&dot);
    assert!(text.starts_with("digraph tnfg {"));
    assert!(text.contains("shape=doublecircle"));

    let limited = prptl(&["graph", "<> q", "--node-limit", "2"]);
    assert_eq!(code(&limited), 3);
    assert!(stderr(&limited).contains("node limit"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "sample",
        &model("coin.dtmc"),
        "X[1,2] q",
        "--samples",
        "5000",
        "--horizon",
        "2",
        "--seed",
        "42",
    ];
    let first = prptl(&args);
    let second = prptl(&args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(code(&first), 0);

    let check = ["check", &model("coin.dtmc"), "Pr>=0.99 [ <> q ]"];
    assert_eq!(prptl(&check).stdout, prptl(&check).stdout);
}

#[test]
fn json_lines_output_carries_the_documented_fields() {
    let out = prptl(&[
        "check",
        &model("coin.dtmc"),
        "Pr>=0.5 [ X[1,1] q ]",
        "--format",
        "json-lines",
    ]);
    assert_eq!(code(&out), 0);
    let object: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(object["command"], "check");
    assert_eq!(object["verdict"], "holds");
    assert_eq!(object["exact"], "1/2");
    assert_eq!(object["value"], 0.5);
    assert_eq!(object["method"], "bounded-dp");

    let out = prptl(&[
        "sample",
        &model("coin.dtmc"),
        "X[1,2] q",
        "--samples",
        "1000",
        "--horizon",
        "2",
        "--format",
        "json-lines",
    ]);
    let object: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(object["command"], "sample");
    assert_eq!(object["samples"], 1000);
    assert_eq!(object["seed"], 0);
    assert_eq!(object["truncated"], false);
    assert!(object["estimate"].is_f64());
    assert!(object["low"].is_f64() && object["high"].is_f64());

    let out = prptl(&["graph", "p", "--format", "json-lines"]);
    let object: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(object["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(object["edges"].as_array().unwrap().len(), 4);

    let out = prptl(&["eval", &model("flips.trace"), "p", "--format", "json-lines"]);
    let object: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(object["holds"], true);
    assert_eq!(object["states"], 4);
}
