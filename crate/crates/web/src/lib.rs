//! Browser bindings: three operations over JSON strings, driven by `www/index.html`.
//!
//! Each export is a thin wrapper over a plain function returning `Result<String, String>`,
//! so the logic is testable natively.

use serde_json::json;
use wasm_bindgen::prelude::*;

use bfm_core::bayesian::{
    bayesian_expected_value, expected_optimal, k_family, prior_sample_experiment, BayesianMechanism,
};
use bfm_core::harness::report::ratio;
use bfm_core::lpcore::worst_gap;
use bfm_core::mechanisms::{build, exact_expected_value, run, BuildOptions, MechanismId};
use bfm_core::schema::parse_instance;
use bfm_core::valuations::brute_force_opt;
use bfm_core::CoinTape;

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Exact expectation, budgeted optimum, and one sample run on the tape seeded by `seed`.
pub fn evaluate(instance_json: &str, mechanism: &str, seed: u64) -> Result<String, String> {
    let instance = parse_instance(instance_json).map_err(|e| e.to_string())?;
    let id: MechanismId = mechanism.parse()?;
    let m = build(id, &instance, BuildOptions::default()).map_err(|e| e.to_string())?;
    let expected = exact_expected_value(m.as_ref(), instance.costs()).map_err(|e| e.to_string())?;
    let (opt_set, opt) = brute_force_opt(
        instance.valuation(),
        instance.costs(),
        instance.budget(),
        instance.ground(),
    )
    .map_err(|e| e.to_string())?;
    let outcome =
        run(m.as_ref(), instance.costs(), &CoinTape::new(seed)).map_err(|e| e.to_string())?;
    Ok(json!({
        "mechanism": id,
        "seed": seed,
        "expected": expected,
        "optimum": opt,
        "optimalSet": opt_set,
        "ratio": finite(ratio(opt, expected)),
        "sampleRun": outcome,
    })
    .to_string())
}

/// Per-subset `v`, `ṽ` and gap, plus the worst gap.
pub fn gap(instance_json: &str) -> Result<String, String> {
    let instance = parse_instance(instance_json).map_err(|e| e.to_string())?;
    let report = worst_gap(instance.valuation()).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// The correlated `k`-family (truncated to 16 agents): `E[OPT]`, the mechanism's value
/// (exact up to 8 agents, otherwise Monte Carlo) and the prior-sampling strawman's.
pub fn bayes_family(k: u32, trials: usize, seed: u64) -> Result<String, String> {
    if !(1..=8).contains(&k) {
        return Err(format!("k must be between 1 and 8, got {k}"));
    }
    let agents = (1usize << k).min(16);
    let (v, dist, budget) = k_family(k, agents).map_err(|e| e.to_string())?;
    let expected_opt = expected_optimal(&dist, &v, budget).map_err(|e| e.to_string())?;
    let exact = if agents <= 8 {
        let m = BayesianMechanism::new(&v, dist.clone(), budget).map_err(|e| e.to_string())?;
        Some(bayesian_expected_value(&m).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let sampled =
        prior_sample_experiment(&v, &dist, budget, trials, seed).map_err(|e| e.to_string())?;
    let (mechanism, strawman) = match sampled {
        Some((_, m, s)) => (Some(m), Some(s)),
        None => (None, None),
    };
    Ok(json!({
        "k": k,
        "agents": agents,
        "budget": budget,
        "expectedOpt": expected_opt,
        "exact": exact,
        "exactRatio": exact.and_then(|e| finite(ratio(expected_opt, e))),
        "mechanism": mechanism,
        "strawman": strawman,
        "mechanismRatio": mechanism.and_then(|m| finite(ratio(expected_opt, m.mean))),
        "strawmanRatio": strawman.and_then(|s| finite(ratio(expected_opt, s.mean))),
    })
    .to_string())
}

#[wasm_bindgen(js_name = evaluate)]
pub fn evaluate_js(instance_json: &str, mechanism: &str, seed: u32) -> Result<String, JsError> {
    evaluate(instance_json, mechanism, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = gap)]
pub fn gap_js(instance_json: &str) -> Result<String, JsError> {
    gap(instance_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = bayesFamily)]
pub fn bayes_family_js(k: u32, trials: u32, seed: u32) -> Result<String, JsError> {
    bayes_family(k, trials as usize, seed.into()).map_err(|e| JsError::new(&e))
}
