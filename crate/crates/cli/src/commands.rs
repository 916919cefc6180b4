use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use bfm_core::bayesian::{
    bayesian_expected_value, bayesian_monte_carlo, bayesian_run, expected_optimal, k_family,
    prior_sample_experiment, BayesianMechanism,
};
use bfm_core::harness::report::ratio;
use bfm_core::harness::{
    approximation_report, check_budget_ir_transfers, check_universal_truthfulness, corpus,
    rows_to_csv, EvalMode, ExperimentRow, NamedInstance, ViolationKind, ViolationReport,
};
use bfm_core::lpcore::worst_gap;
use bfm_core::mechanisms::expectation::trial_seeds;
use bfm_core::mechanisms::{
    build, exact_expected_value, monte_carlo, run as run_once, BuildOptions, MechanismId,
};
use bfm_core::schema::{
    corpus_to_json, distribution_to_json, instance_to_json, read_corpus, read_distribution,
    read_instance,
};
use bfm_core::valuations::brute_force_opt;
use bfm_core::{CoinTape, Instance, SetFunction};

use crate::output::{emit, finite, Stamp};
use crate::{
    BayesArgs, CorpusSource, EvalArgs, Experiment, Format, GapArgs, GenArgs, ReportArgs, RunArgs,
    Status, TuningArgs, VerifyArgs,
};

fn load_instance(path: &Path) -> Result<Instance> {
    read_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

fn load_corpus(source: &CorpusSource, seed: u64) -> Result<(Vec<NamedInstance>, String)> {
    if let Some(path) = &source.corpus {
        let instances =
            read_corpus(path).with_context(|| format!("reading corpus {}", path.display()))?;
        Ok((instances, path.display().to_string()))
    } else if let Some(spec) = source.gen {
        Ok((
            corpus(&[spec.kind], &[spec.n], spec.count, seed)?,
            format!("gen:{spec}"),
        ))
    } else {
        unreachable!("clap requires one corpus source")
    }
}

fn options(t: TuningArgs) -> Result<BuildOptions> {
    if !(t.grid_step.is_finite() && t.grid_step > 0.0) {
        bail!("--grid-step must be positive, got {}", t.grid_step);
    }
    Ok(BuildOptions {
        grid_step: t.grid_step,
        opt_mode: t.opt_mode.into(),
    })
}

fn optimum(instance: &Instance) -> Result<f64> {
    Ok(brute_force_opt(
        instance.valuation(),
        instance.costs(),
        instance.budget(),
        instance.ground(),
    )?
    .1)
}

fn winners_cell(winners: bfm_core::AgentSet) -> String {
    winners
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn run(a: RunArgs) -> Result<Status> {
    let instance = load_instance(&a.instance)?;
    let m = build(a.mechanism, &instance, options(a.tuning)?)?;
    let source = a.instance.display().to_string();
    let stamp = Stamp {
        verb: "run",
        seed: Some(a.seed),
        mechanisms: vec![a.mechanism.to_string()],
        source: Some(&source),
    };
    let opt = optimum(&instance)?;
    let format = a.output.format.unwrap_or(Format::Json);

    let text = if a.eval.exact || a.eval.trials.is_some() {
        let (expected, std_error, trials) = match a.eval.trials {
            Some(t) => {
                let mc = monte_carlo(m.as_ref(), instance.costs(), a.seed, t as usize);
                (mc.mean, mc.std_error, Some(t))
            }
            None => (
                exact_expected_value(m.as_ref(), instance.costs())?,
                0.0,
                None,
            ),
        };
        let r = ratio(opt, expected);
        eprintln!(
            "{}: E[M] = {expected:.6}{} , OPT = {opt:.6}, OPT/E[M] = {r:.4}",
            a.mechanism,
            trials
                .map(|_| format!(" ± {std_error:.2e}"))
                .unwrap_or_else(|| " (exact)".into())
        );
        match format {
            Format::Json => stamp.json(json!({
                "mode": if trials.is_some() { "monte-carlo" } else { "exact" },
                "trials": trials,
                "expected": expected,
                "stdError": std_error,
                "optimum": opt,
                "ratio": finite(r),
            })),
            Format::Csv => {
                let row = ExperimentRow {
                    instance: source.clone(),
                    mechanism: a.mechanism,
                    exact: trials.is_none(),
                    expected,
                    std_error,
                    optimum: opt,
                    ratio: r,
                };
                stamp.csv(&rows_to_csv(&[row]))
            }
        }
    } else {
        let outcome = run_once(m.as_ref(), instance.costs(), &CoinTape::new(a.seed))?;
        eprintln!(
            "{}: winners {} paid {:.6} of budget {}, value {:.6} (OPT {opt:.6})",
            a.mechanism,
            outcome.winners,
            outcome.total_payment(),
            instance.budget(),
            outcome.achieved_value
        );
        match format {
            Format::Json => stamp.json(json!({ "outcome": outcome, "optimum": opt })),
            Format::Csv => stamp.csv(&format!(
                "seed,mechanism,winners,total_payment,achieved_value,optimum\n{},{},{},{},{},{}\n",
                a.seed,
                a.mechanism,
                winners_cell(outcome.winners),
                outcome.total_payment(),
                outcome.achieved_value,
                opt
            )),
        }
    };
    emit(&text, a.output.out.as_deref())?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MechanismSummary {
    mechanism: MechanismId,
    runs: usize,
    truthfulness: usize,
    budget: usize,
    individual_rationality: usize,
    transfer: usize,
    posted_price: usize,
}

pub fn verify(a: VerifyArgs) -> Result<Status> {
    let (instances, source) = load_corpus(&a.source, a.seed)?;
    let mechanisms = if a.mechanism.is_empty() {
        MechanismId::TRUTHFUL.to_vec()
    } else {
        a.mechanism.clone()
    };
    let opts = options(a.tuning)?;
    let seeds: Vec<u64> = trial_seeds(a.seed, a.seeds).collect();
    let mut total = ViolationReport::default();
    let mut summaries = Vec::new();
    for &id in &mechanisms {
        let mut report = ViolationReport::default();
        for named in &instances {
            let m = build(id, &named.instance, opts)?;
            let label = format!("{id}/{}", named.id);
            let costs = named.instance.costs();
            report.merge(check_universal_truthfulness(
                m.as_ref(),
                costs,
                &seeds,
                a.grid as usize,
                &label,
            )?);
            let mut outcomes = check_budget_ir_transfers(m.as_ref(), costs, &seeds, &label)?;
            // runs were already counted by the truthfulness sweep
            outcomes.runs = 0;
            report.merge(outcomes);
        }
        let summary = MechanismSummary {
            mechanism: id,
            runs: report.runs,
            truthfulness: report.count(ViolationKind::Truthfulness),
            budget: report.count(ViolationKind::Budget),
            individual_rationality: report.count(ViolationKind::IndividualRationality),
            transfer: report.count(ViolationKind::Transfer),
            posted_price: report.count(ViolationKind::PostedPrice),
        };
        eprintln!(
            "{id}: {} runs over {} instances, {} violations",
            summary.runs,
            instances.len(),
            report.violations.len()
        );
        summaries.push(summary);
        total.merge(report);
    }
    let stamp = Stamp {
        verb: "verify",
        seed: Some(a.seed),
        mechanisms: mechanisms.iter().map(|m| m.to_string()).collect(),
        source: Some(&source),
    };
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => stamp.json(json!({
            "passed": total.passed(),
            "instances": instances.len(),
            "tapes": a.seeds,
            "grid": a.grid,
            "mechanisms": summaries,
            "violations": total.violations,
        })),
        Format::Csv => stamp.csv(&total.to_csv()),
    };
    emit(&text, a.output.out.as_deref())?;
    if total.passed() {
        eprintln!("verify: passed");
        Ok(Status::Ok)
    } else {
        eprintln!("verify: FAILED with {} violations", total.violations.len());
        Ok(Status::VerificationFailed)
    }
}

pub fn gap(a: GapArgs) -> Result<Status> {
    let instance = load_instance(&a.instance)?;
    let report = worst_gap(instance.valuation())?;
    eprintln!("worst integrality gap I = {:.6}", report.worst);
    let source = a.instance.display().to_string();
    let stamp = Stamp {
        verb: "gap",
        seed: None,
        mechanisms: Vec::new(),
        source: Some(&source),
    };
    let text = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => stamp.csv(&report.to_csv()),
        Format::Json => stamp.json(&report),
    };
    emit(&text, a.output.out.as_deref())?;
    Ok(Status::Ok)
}

pub fn bayes(a: BayesArgs) -> Result<Status> {
    let instance = load_instance(&a.instance)?;
    let dist = read_distribution(&a.dist)
        .with_context(|| format!("reading distribution {}", a.dist.display()))?;
    let v = instance.valuation();
    let budget = instance.budget();
    let mechanism = BayesianMechanism::new(v, dist.clone(), budget)?;
    let expected_opt = expected_optimal(&dist, v, budget)?;
    let source = format!("{} + {}", a.instance.display(), a.dist.display());
    let name = match a.experiment {
        Some(Experiment::PriorSample) => "bayes;bayes-prior-sample",
        None => "bayes",
    };
    let stamp = Stamp {
        verb: "bayes",
        seed: Some(a.seed),
        mechanisms: vec![name.to_string()],
        source: Some(&source),
    };

    let text = if let Some(Experiment::PriorSample) = a.experiment {
        if a.eval.exact {
            bail!("--experiment prior-sample is Monte Carlo only; use --trials");
        }
        let trials = a.eval.trials.unwrap_or(10_000) as usize;
        let (_, honest, straw) =
            prior_sample_experiment(v, &dist, budget, trials, a.seed)?.expect("trials is positive");
        let (mr, sr) = (
            ratio(expected_opt, honest.mean),
            ratio(expected_opt, straw.mean),
        );
        eprintln!("E[OPT] = {expected_opt:.6}; mechanism ratio {mr:.4}, prior-sample strawman ratio {sr:.4}");
        match a.output.format.unwrap_or(Format::Csv) {
            Format::Csv => stamp.csv(&format!(
                "agents,trials,expected_opt,mechanism_value,mechanism_se,strawman_value,strawman_se,mechanism_ratio,strawman_ratio\n{},{},{},{},{},{},{},{},{}\n",
                v.agents(),
                trials,
                expected_opt,
                honest.mean,
                honest.std_error,
                straw.mean,
                straw.std_error,
                mr,
                sr
            )),
            Format::Json => stamp.json(json!({
                "expectedOpt": expected_opt,
                "mechanism": honest,
                "strawman": straw,
                "mechanismRatio": finite(mr),
                "strawmanRatio": finite(sr),
            })),
        }
    } else if a.eval.exact || a.eval.trials.is_some() {
        let (expected, std_error) = match a.eval.trials {
            Some(t) => {
                let mc = bayesian_monte_carlo(&mechanism, a.seed, t as usize);
                (mc.mean, mc.std_error)
            }
            None => (bayesian_expected_value(&mechanism)?, 0.0),
        };
        let r = ratio(expected_opt, expected);
        eprintln!("E[M] = {expected:.6}, E[OPT] = {expected_opt:.6}, ratio {r:.4}");
        match a.output.format.unwrap_or(Format::Json) {
            Format::Json => stamp.json(json!({
                "mode": if a.eval.exact { "exact" } else { "monte-carlo" },
                "trials": a.eval.trials,
                "expected": expected,
                "stdError": std_error,
                "expectedOpt": expected_opt,
                "ratio": finite(r),
            })),
            Format::Csv => stamp.csv(&format!(
                "expected,std_error,expected_opt,ratio\n{expected},{std_error},{expected_opt},{r}\n"
            )),
        }
    } else {
        let (costs, outcome) = bayesian_run(&mechanism, &CoinTape::new(a.seed))?;
        eprintln!(
            "realized costs {costs:?}: winners {} paid {:.6}, value {:.6}",
            outcome.winners,
            outcome.total_payment(),
            outcome.achieved_value
        );
        match a.output.format.unwrap_or(Format::Json) {
            Format::Json => stamp
                .json(json!({ "costs": costs, "outcome": outcome, "expectedOpt": expected_opt })),
            Format::Csv => stamp.csv(&format!(
                "seed,winners,total_payment,achieved_value,expected_opt\n{},{},{},{},{}\n",
                a.seed,
                winners_cell(outcome.winners),
                outcome.total_payment(),
                outcome.achieved_value,
                expected_opt
            )),
        }
    };
    emit(&text, a.output.out.as_deref())?;
    Ok(Status::Ok)
}

pub fn gen(a: GenArgs) -> Result<Status> {
    if let Some(k) = a.k_family {
        if k > 4 && a.agents.is_none() {
            bail!("the k = {k} family has 2^{k} agents; pass --agents (at most 16) to truncate it");
        }
        let agents = a.agents.unwrap_or(1 << k);
        let (v, dist, budget) = k_family(k, agents)?;
        let instance = Instance::new(v, dist.scenarios()[0].costs.clone(), budget)?;
        emit(&instance_to_json(&instance), a.out.as_deref())?;
        let dist_out = a.dist_out.as_deref().expect("clap requires --dist-out");
        emit(&distribution_to_json(&dist), Some(dist_out))?;
        eprintln!("k = {k} family with {agents} agents, budget {budget}");
    } else {
        let spec = a.gen.expect("clap requires --gen or --k-family");
        let instances = corpus(&[spec.kind], &[spec.n], spec.count, a.seed)?;
        let origin = spec.to_string();
        emit(
            &corpus_to_json(&instances, Some((&origin, a.seed))),
            a.out.as_deref(),
        )?;
        eprintln!(
            "generated {} {} instances with n = {}",
            instances.len(),
            spec.kind,
            spec.n
        );
    }
    Ok(Status::Ok)
}

pub fn report(a: ReportArgs) -> Result<Status> {
    let (instances, source) = load_corpus(&a.source, a.seed)?;
    let mechanisms = if a.mechanism.is_empty() {
        MechanismId::ALL.to_vec()
    } else {
        a.mechanism.clone()
    };
    let mode = eval_mode(a.eval, a.seed);
    let opts = options(a.tuning)?;
    let mut rows = Vec::new();
    for &id in &mechanisms {
        let part = approximation_report(id, &instances, mode, opts)?;
        let worst = part.iter().map(|r| r.ratio).fold(1.0, f64::max);
        eprintln!(
            "{id}: worst OPT/E[M] = {worst:.4} over {} instances",
            part.len()
        );
        rows.extend(part);
    }
    let stamp = Stamp {
        verb: "report",
        seed: Some(a.seed),
        mechanisms: mechanisms.iter().map(|m| m.to_string()).collect(),
        source: Some(&source),
    };
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Csv => stamp.csv(&rows_to_csv(&rows)),
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "instance": r.instance,
                        "mechanism": r.mechanism,
                        "exact": r.exact,
                        "expected": r.expected,
                        "stdError": r.std_error,
                        "optimum": r.optimum,
                        "ratio": finite(r.ratio),
                    })
                })
                .collect();
            stamp.json(json!({ "mode": mode, "rows": rows }))
        }
    };
    emit(&text, a.output.out.as_deref())?;
    Ok(Status::Ok)
}

fn eval_mode(eval: EvalArgs, seed: u64) -> EvalMode {
    match eval.trials {
        Some(t) => EvalMode::MonteCarlo {
            trials: t as usize,
            seed,
        },
        None => EvalMode::Exact,
    }
}
