use bfm_web::{bayes_family, evaluate, gap};
use serde_json::Value;

const TWO_CLAUSE: &str = include_str!("../../../data/two-clause.json");
const BY_SIZE: &str = include_str!("../../../data/by-size-4.json");

#[test]
fn evaluate_two_clause() {
    let v: Value = serde_json::from_str(&evaluate(TWO_CLAUSE, "xos-main", 1).unwrap()).unwrap();
    assert!((v["expected"].as_f64().unwrap() - 2.5).abs() < 1e-12);
    assert_eq!(v["optimum"], 3.0);
    assert_eq!(v["optimalSet"], serde_json::json!([1]));
    assert!(v["sampleRun"]["winners"].is_array());
}

#[test]
fn evaluate_reports_bad_input() {
    assert!(evaluate(TWO_CLAUSE, "vcg", 1)
        .unwrap_err()
        .contains("unknown mechanism"));
    let err = evaluate("{\"schema\": \"v1\"}", "additive", 1).unwrap_err();
    assert!(err.contains("field"), "{err}");
}

#[test]
fn gap_by_size() {
    let v: Value = serde_json::from_str(&gap(BY_SIZE).unwrap()).unwrap();
    assert!((v["worst"].as_f64().unwrap() - 1.5).abs() < 1e-6);
    assert_eq!(v["per_set"].as_array().unwrap().len(), 16);
}

#[test]
fn bayes_family_k3() {
    let v: Value = serde_json::from_str(&bayes_family(3, 200, 7).unwrap()).unwrap();
    assert_eq!(v["expectedOpt"], 2.0);
    assert!(v["exact"].as_f64().unwrap() >= 2.0 / 393216.0);
    assert_eq!(v["mechanism"]["trials"], 200);
    assert!(bayes_family(0, 10, 1).is_err());
}
