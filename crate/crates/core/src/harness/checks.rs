//! Property checks over runs: truthfulness, budget feasibility, individual
//! rationality, no positive transfers, posted-price identities, and the
//! structural claims behind the XOS and Bayesian rules.

use serde::Serialize;

use crate::error::Result;
use crate::mechanisms::{run, Allocation, Branch, Mechanism, Outcome};
use crate::subset::AgentSet;
use crate::tape::{CoinTape, Coins};
use crate::tolerance::{BUDGET, TRUTHFULNESS};
use crate::valuations::SetFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Truthfulness,
    Budget,
    IndividualRationality,
    Transfer,
    /// A posted price (`B` on max-item branches, `B/k` in a share round) not paid exactly.
    PostedPrice,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub instance: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    /// How far past the tolerance the run went.
    pub magnitude: f64,
}

/// Violations found by a sweep; empty iff the sweep passed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ViolationReport {
    pub runs: usize,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: ViolationReport) {
        self.runs += other.runs;
        self.violations.extend(other.violations);
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub const CSV_HEADER: &'static str = "kind,instance,seed,agent,deviation,magnitude";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for v in &self.violations {
            let kind = serde_json::to_value(v.kind).expect("enum serializes");
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                kind.as_str().unwrap_or_default(),
                v.instance,
                v.seed,
                v.agent.map(|a| a.to_string()).unwrap_or_default(),
                v.deviation.map(|d| d.to_string()).unwrap_or_default(),
                v.magnitude
            ));
        }
        out
    }
}

fn utility(
    mechanism: &dyn Mechanism,
    bids: &[f64],
    coins: &dyn Coins,
    agent: usize,
    cost: f64,
) -> Result<(f64, Option<f64>)> {
    let allocation = mechanism.allocate(bids, coins);
    if !allocation.winners.contains(agent) {
        return Ok((0.0, None));
    }
    let price = mechanism.payment(bids, coins, agent, &allocation)?;
    Ok((price - cost, Some(price)))
}

/// Deviation bids probed for one agent: a uniform grid over `[0, B]` plus
/// `c/2`, `c`, and points just around the truthful payment.
pub fn deviation_bids(budget: f64, cost: f64, payment: Option<f64>, grid_size: usize) -> Vec<f64> {
    assert!(grid_size >= 2, "deviation grid needs at least two points");
    let mut bids: Vec<f64> = (0..grid_size)
        .map(|k| budget * k as f64 / (grid_size - 1) as f64)
        .collect();
    bids.push(cost / 2.0);
    bids.push(cost);
    if let Some(p) = payment {
        let eps = 1e-6 * budget;
        bids.push((p - eps).max(0.0));
        bids.push(p + eps);
    }
    bids
}

/// Truthful utility versus every probed deviation, for every agent and tape.
pub fn check_universal_truthfulness(
    mechanism: &dyn Mechanism,
    costs: &[f64],
    seeds: &[u64],
    grid_size: usize,
    instance: &str,
) -> Result<ViolationReport> {
    let budget = mechanism.budget();
    let slack = TRUTHFULNESS * budget;
    let mut report = ViolationReport::default();
    let mut bids = costs.to_vec();
    for &seed in seeds {
        let tape = CoinTape::new(seed);
        let truthful = mechanism.allocate(costs, &tape);
        report.runs += 1;
        for agent in 0..costs.len() {
            let cost = costs[agent];
            let (honest, payment) = if truthful.winners.contains(agent) {
                let p = mechanism.payment(costs, &tape, agent, &truthful)?;
                (p - cost, Some(p))
            } else {
                (0.0, None)
            };
            for x in deviation_bids(budget, cost, payment, grid_size) {
                bids[agent] = x;
                let (lie, _) = utility(mechanism, &bids, &tape, agent, cost)?;
                if lie > honest + slack {
                    report.violations.push(Violation {
                        kind: ViolationKind::Truthfulness,
                        instance: instance.to_string(),
                        seed,
                        agent: Some(agent),
                        deviation: Some(x),
                        magnitude: lie - honest,
                    });
                }
            }
            bids[agent] = cost;
        }
    }
    Ok(report)
}

/// Outcome invariants of one run at truthful bids.
pub fn check_outcome(
    outcome: &Outcome,
    bids: &[f64],
    budget: f64,
    instance: &str,
    seed: u64,
) -> Vec<Violation> {
    let mut found = Vec::new();
    let mut flag = |kind, agent, magnitude| {
        found.push(Violation {
            kind,
            instance: instance.to_string(),
            seed,
            agent,
            deviation: None,
            magnitude,
        })
    };
    let total = outcome.total_payment();
    if total > budget * (1.0 + BUDGET) {
        flag(ViolationKind::Budget, None, total - budget);
    }
    for (i, &p) in outcome.payments.iter().enumerate() {
        if outcome.winners.contains(i) {
            if p < bids[i] - BUDGET * budget {
                flag(ViolationKind::IndividualRationality, Some(i), bids[i] - p);
            }
        } else if p != 0.0 {
            flag(ViolationKind::Transfer, Some(i), p.abs());
        }
    }
    let d = &outcome.diagnostics;
    let posted = if d.branches.first() == Some(&Branch::MaxItem) {
        Some(budget)
    } else {
        d.share_round.map(|k| budget / k as f64)
    };
    if let Some(price) = posted {
        for i in outcome.winners.iter() {
            if outcome.payments[i] != price {
                flag(
                    ViolationKind::PostedPrice,
                    Some(i),
                    (outcome.payments[i] - price).abs(),
                );
            }
        }
    }
    found
}

/// Budget, IR, transfer and posted-price checks at truthful bids on every tape.
pub fn check_budget_ir_transfers(
    mechanism: &dyn Mechanism,
    costs: &[f64],
    seeds: &[u64],
    instance: &str,
) -> Result<ViolationReport> {
    let mut report = ViolationReport::default();
    for &seed in seeds {
        let outcome = run(mechanism, costs, &CoinTape::new(seed))?;
        report.runs += 1;
        report.violations.extend(check_outcome(
            &outcome,
            costs,
            mechanism.budget(),
            instance,
            seed,
        ));
    }
    Ok(report)
}

/// A failed structural claim on one trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimFailure {
    pub claim: &'static str,
    pub set: AgentSet,
    pub magnitude: f64,
}

/// The witness on `S*` beats the threshold on every subset: `f(S) ≥ t·c(S)`.
pub fn check_witness_covers_threshold(
    allocation: &Allocation,
    costs: &[f64],
    tolerance: f64,
) -> Vec<ClaimFailure> {
    let d = &allocation.diagnostics;
    let (Some(candidates), Some(t), Some(f)) = (d.candidates, d.threshold, d.witness.as_ref())
    else {
        return Vec::new();
    };
    candidates
        .subsets()
        .filter_map(|s| {
            let gap = t * s.sum(costs) - s.sum(f);
            (gap > tolerance).then_some(ClaimFailure {
                claim: "witness-covers-threshold",
                set: s,
                magnitude: gap,
            })
        })
        .collect()
}

/// Lowering a candidate's bid leaves `S*` unchanged.
pub fn check_candidates_stable(
    mechanism: &dyn Mechanism,
    costs: &[f64],
    coins: &dyn Coins,
    allocation: &Allocation,
) -> Vec<ClaimFailure> {
    let Some(candidates) = allocation.diagnostics.candidates else {
        return Vec::new();
    };
    let mut failures = Vec::new();
    let mut bids = costs.to_vec();
    for j in candidates.iter() {
        for factor in [0.0, 0.25, 0.5, 0.75, 0.999] {
            bids[j] = costs[j] * factor;
            let again = mechanism.allocate(&bids, coins).diagnostics.candidates;
            if again != Some(candidates) {
                failures.push(ClaimFailure {
                    claim: "candidates-stable",
                    set: again.unwrap_or(AgentSet::EMPTY),
                    magnitude: bids[j],
                });
            }
        }
        bids[j] = costs[j];
    }
    failures
}

/// `ṽ(S) ≥ t·c(S)` and `ṽ(S) ≥ t·d(S)` for every `S ⊆ S*` on a run that drew `d`.
pub fn check_tilde_covers_threshold<F: SetFunction + ?Sized>(
    tilde: &F,
    allocation: &Allocation,
    costs: &[f64],
    tolerance: f64,
) -> Vec<ClaimFailure> {
    let d = &allocation.diagnostics;
    let (Some(candidates), Some(t), Some(sampled)) =
        (d.candidates, d.threshold, d.sampled_costs.as_ref())
    else {
        return Vec::new();
    };
    let mut failures = Vec::new();
    for s in candidates.subsets() {
        let value = tilde.value(s);
        for (claim, vector) in [
            ("tilde-covers-true-costs", costs),
            ("tilde-covers-sampled-costs", sampled.as_slice()),
        ] {
            let gap = t * s.sum(vector) - value;
            if gap > tolerance {
                failures.push(ClaimFailure {
                    claim,
                    set: s,
                    magnitude: gap,
                });
            }
        }
    }
    failures
}
