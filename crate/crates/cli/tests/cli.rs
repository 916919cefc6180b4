use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn bfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_exact_reports_expectation_optimum_and_ratio() {
    let instance = data("two-clause.json");
    let out = bfm(&[
        "run",
        "--instance",
        instance.to_str().unwrap(),
        "--mechanism",
        "xos-main",
        "--seed",
        "1",
        "--exact",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["schema"], "v1");
    assert_eq!(v["seed"], 1);
    assert_eq!(v["mechanism"][0], "xos-main");
    assert_eq!(v["tolerances"]["truthfulness"], 1e-7);
    let r = &v["result"];
    assert_eq!(r["mode"], "exact");
    assert!((r["expected"].as_f64().unwrap() - 2.5).abs() < 1e-12);
    assert_eq!(r["optimum"], 3.0);
    assert!((r["ratio"].as_f64().unwrap() - 1.2).abs() < 1e-12);
}

#[test]
fn single_run_emits_outcome() {
    let instance = data("two-clause.json");
    let out = bfm(&[
        "run",
        "--instance",
        instance.to_str().unwrap(),
        "--mechanism",
        "additive",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let outcome = &json(&out)["result"]["outcome"];
    let paid: f64 = outcome["payments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p.as_f64().unwrap())
        .sum();
    assert!(paid <= 1.0 + 1e-9);
    assert!(outcome["achievedValue"].is_number());
}

#[test]
fn identical_command_lines_give_identical_bytes() {
    let instance = data("by-size-4.json");
    let args = [
        "run",
        "--instance",
        instance.to_str().unwrap(),
        "--mechanism",
        "sa-main",
        "--seed",
        "9",
        "--trials",
        "300",
    ];
    let (a, b) = (bfm(&args), bfm(&args));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);

    let verify = [
        "verify", "--gen", "xos,4,3", "--seed", "5", "--seeds", "3", "--grid", "5",
    ];
    let (a, b) = (bfm(&verify), bfm(&verify));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_passes_on_generated_additive_corpus() {
    let out = bfm(&[
        "verify",
        "--gen",
        "additive,6,50",
        "--mechanism",
        "sa-main",
        "--seeds",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["result"]["passed"], true);
    assert_eq!(v["result"]["instances"], 50);
}

#[test]
fn verify_flags_the_pay_your_bid_rule() {
    let out = bfm(&[
        "verify",
        "--gen",
        "xos,4,4",
        "--mechanism",
        "sa-algmax",
        "--seeds",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# schema=v1 verb=verify seed=0 mechanism=sa-algmax"));
    assert!(text
        .lines()
        .any(|l| l.starts_with("truthfulness,sa-algmax/")));
}

#[test]
fn unknown_mechanism_is_a_usage_error() {
    let instance = data("two-clause.json");
    let out = bfm(&[
        "run",
        "--instance",
        instance.to_str().unwrap(),
        "--mechanism",
        "vcg",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(
        err.contains("unknown mechanism `vcg`") && err.contains("Usage"),
        "{err}"
    );
}

#[test]
fn schema_errors_name_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        "{\n  \"schema\": \"v1\",\n  \"n\": 2,\n  \"budget\": 1.0,\n  \"costs\": [1.0],\n  \"valuation\": { \"kind\": \"additive\", \"weights\": [1, 2] }\n}\n",
    )
    .unwrap();
    let out = bfm(&[
        "run",
        "--instance",
        path.to_str().unwrap(),
        "--mechanism",
        "additive",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("`costs`") && err.contains("line 5"), "{err}");

    std::fs::write(&path, "{\"schema\": \"v1\", \"n\": 1, \"costs\": [1], \"valuation\": {\"kind\": \"additive\", \"weights\": [1]}}").unwrap();
    let out = bfm(&["gap", "--instance", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("budget"), "{}", stderr(&out));
}

#[test]
fn exact_mode_refuses_large_instances() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let out = bfm(&[
        "gen",
        "--gen",
        "additive,12,1",
        "--seed",
        "2",
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = bfm(&[
        "report",
        "--corpus",
        corpus.to_str().unwrap(),
        "--mechanism",
        "xos-main",
        "--seed",
        "1",
        "--exact",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("exceeds the limit"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn gap_csv_on_by_size_instance() {
    let instance = data("by-size-4.json");
    let out = bfm(&["gap", "--instance", instance.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema=v1 verb=gap"));
    assert_eq!(lines.next(), Some("mask,v,tilde_v,gap"));
    let last: Vec<f64> = lines
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(last[0], 15.0);
    assert!((last[2] - 4.0 / 3.0).abs() < 1e-6 && (last[3] - 1.5).abs() < 1e-6);
}

#[test]
fn gen_corpus_round_trips_through_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let out = bfm(&[
        "gen",
        "--gen",
        "coverage,5,2",
        "--seed",
        "8",
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&corpus).unwrap()).unwrap();
    assert_eq!(file["seed"], 8);
    assert_eq!(file["generator"], "coverage,5,2");
    let out = bfm(&[
        "report",
        "--corpus",
        corpus.to_str().unwrap(),
        "--seed",
        "1",
        "--mechanism",
        "additive,sa-gap",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = json(&out)["result"]["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 4);
    assert!(rows
        .iter()
        .all(|r| r["ratio"].as_f64().unwrap() >= 1.0 - 1e-9));
}

#[test]
fn bayes_exact_on_k3_family() {
    let (inst, dist) = (data("k3-instance.json"), data("k3-dist.json"));
    let out = bfm(&[
        "bayes",
        "--instance",
        inst.to_str().unwrap(),
        "--dist",
        dist.to_str().unwrap(),
        "--seed",
        "1",
        "--exact",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = &json(&out)["result"];
    assert_eq!(r["expectedOpt"], 2.0);
    assert!(r["expected"].as_f64().unwrap() >= 2.0 / 393216.0);
}

#[test]
fn bayes_prior_sample_emits_csv() {
    let (inst, dist) = (data("k3-instance.json"), data("k3-dist.json"));
    let args = [
        "bayes",
        "--instance",
        inst.to_str().unwrap(),
        "--dist",
        dist.to_str().unwrap(),
        "--seed",
        "4",
        "--experiment",
        "prior-sample",
        "--trials",
        "500",
    ];
    let out = bfm(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# schema=v1 verb=bayes seed=4"));
    assert!(lines[1].starts_with("agents,trials,expected_opt"));
    assert!(lines[2].starts_with("8,500,2,"));
    assert_eq!(bfm(&args).stdout, out.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let instance = data("two-clause.json");
    let out = bfm(&[
        "run",
        "--instance",
        instance.to_str().unwrap(),
        "--mechanism",
        "sa-gap",
        "--seed",
        "2",
        "--exact",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["mechanism"][0], "sa-gap");
}
