//! Prior-free budget-feasible mechanisms.
//!
//! A mechanism is a deterministic allocation rule over `(bids, coins)`.
//! Winners are paid either a price the rule posts itself, or their threshold
//! bid: the supremum bid at which they still win with every other bid and
//! every coin frozen, found by bisection over the whole pipeline.
//!
//! Coin layout shared by the sampling mechanisms (positions relative to the
//! pipeline's base, 0 for top-level use):
//!
//! | position      | meaning                                   |
//! |---------------|-------------------------------------------|
//! | `0`           | top branch: 0 = most valuable agent, 1 = sampling |
//! | `1 + i`       | agent `i` joins the sample `T`            |
//! | `1 + n`       | additive sub-mechanism branch             |

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lpcore::tilde_with_witnesses;
use crate::subset::AgentSet;
use crate::tape::Coins;
use crate::tolerance::BISECTION;
use crate::valuations::{
    ensure_monotone, xos_defining_function, SetFunction, Valuation, ValueTable,
};

pub mod additive;
pub mod expectation;
pub mod gap;
pub mod subadditive;
pub mod xos;

pub use additive::AdditiveMechanism;
pub use expectation::{exact_expected_value, monte_carlo, MonteCarlo};
pub use gap::SaGapMechanism;
pub use subadditive::{
    sa_alg_max, share_threshold_factor, SaAlgMaxRule, SaMainMechanism, SaSampleMechanism,
};
pub use xos::{OptMode, XosMainMechanism, XosSampleMechanism};

/// Mechanisms selectable by id (`run --mechanism`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MechanismId {
    #[serde(rename = "additive")]
    Additive,
    #[serde(rename = "xos-sample")]
    XosSample,
    #[serde(rename = "xos-main")]
    XosMain,
    #[serde(rename = "sa-algmax")]
    SaAlgMax,
    #[serde(rename = "sa-sample")]
    SaSample,
    #[serde(rename = "sa-main")]
    SaMain,
    #[serde(rename = "sa-gap")]
    SaGap,
}

impl MechanismId {
    pub const ALL: [MechanismId; 7] = [
        MechanismId::Additive,
        MechanismId::XosSample,
        MechanismId::XosMain,
        MechanismId::SaAlgMax,
        MechanismId::SaSample,
        MechanismId::SaMain,
        MechanismId::SaGap,
    ];

    /// The universally truthful ones (everything but the bare approximation algorithm).
    pub const TRUTHFUL: [MechanismId; 6] = [
        MechanismId::Additive,
        MechanismId::XosSample,
        MechanismId::XosMain,
        MechanismId::SaSample,
        MechanismId::SaMain,
        MechanismId::SaGap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismId::Additive => "additive",
            MechanismId::XosSample => "xos-sample",
            MechanismId::XosMain => "xos-main",
            MechanismId::SaAlgMax => "sa-algmax",
            MechanismId::SaSample => "sa-sample",
            MechanismId::SaMain => "sa-main",
            MechanismId::SaGap => "sa-gap",
        }
    }
}

impl fmt::Display for MechanismId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        MechanismId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = MechanismId::ALL.iter().map(|m| m.as_str()).collect();
                format!(
                    "unknown mechanism `{s}` (expected one of {})",
                    known.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    MaxItem,
    Sampling,
    AdditiveMaxItem,
    AdditiveGreedy,
    /// Bayesian: winners are the agents bidding at most their sampled cost.
    SampledCosts,
    /// Bayesian: hand the candidate set to the XOS mechanism on `ṽ`.
    TildeXos,
}

/// Named intermediate values of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<Branch>,
    /// Sampled group `T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<AgentSet>,
    /// Value learned from the sample (`v(OPT(T))`, or the approximation's value).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_value: Option<f64>,
    /// Threshold `t`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Candidate set `S*`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<AgentSet>,
    /// Additive witness used on `S*`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    /// Share index `k` at which a cost-sharing round accepted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub share_round: Option<usize>,
    /// Sampled cost vector `d`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled_costs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub conditional_fallback: bool,
    /// `ṽ(winners)` for mechanisms that allocate on `ṽ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilde_value: Option<f64>,
    /// Intermediate values of a nested mechanism run on the candidate set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nested: Option<Box<Diagnostics>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub winners: AgentSet,
    /// Price the rule itself pays every winner, if it posts one.
    pub posted_price: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl Allocation {
    pub fn empty(diagnostics: Diagnostics) -> Self {
        Allocation {
            winners: AgentSet::EMPTY,
            posted_price: None,
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub winners: AgentSet,
    /// One entry per agent; zero for non-winners.
    pub payments: Vec<f64>,
    #[serde(rename = "achievedValue")]
    pub achieved_value: f64,
    pub diagnostics: Diagnostics,
}

impl Outcome {
    pub fn total_payment(&self) -> f64 {
        self.payments.iter().sum()
    }
}

pub trait Mechanism: Send + Sync {
    fn name(&self) -> &str;

    fn agents(&self) -> usize;

    fn budget(&self) -> f64;

    fn allocate(&self, bids: &[f64], coins: &dyn Coins) -> Allocation;

    /// True value of a winner set.
    fn welfare(&self, winners: AgentSet) -> f64;

    /// Payment to `agent`, a winner of `allocation` at `bids`.
    fn payment(
        &self,
        bids: &[f64],
        coins: &dyn Coins,
        agent: usize,
        allocation: &Allocation,
    ) -> Result<f64> {
        if !allocation.winners.contains(agent) {
            return Err(Error::NotAWinner { agent });
        }
        if let Some(price) = allocation.posted_price {
            return Ok(price);
        }
        let mut probe = bids.to_vec();
        ThresholdQuery::new(agent, bids[agent], self.budget()).solve(|x| {
            probe[agent] = x;
            self.allocate(&probe, coins).winners.contains(agent)
        })
    }
}

/// Allocation plus payments to every winner.
pub fn run(mechanism: &dyn Mechanism, bids: &[f64], coins: &dyn Coins) -> Result<Outcome> {
    let allocation = mechanism.allocate(bids, coins);
    let mut payments = vec![0.0; mechanism.agents()];
    for i in allocation.winners.iter() {
        payments[i] = mechanism.payment(bids, coins, i, &allocation)?;
    }
    Ok(Outcome {
        winners: allocation.winners,
        payments,
        achieved_value: mechanism.welfare(allocation.winners),
        diagnostics: allocation.diagnostics,
    })
}

/// Bracket `[lo, hi]` on one agent's bid, winning at `lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdQuery {
    pub agent: usize,
    pub lo: f64,
    pub hi: f64,
    pub tolerance: f64,
}

impl ThresholdQuery {
    /// Bracket from the submitted bid up to the budget; no agent bidding above the budget ever wins.
    pub fn new(agent: usize, bid: f64, budget: f64) -> Self {
        ThresholdQuery {
            agent,
            lo: bid,
            hi: budget.max(bid),
            tolerance: BISECTION * budget,
        }
    }

    /// Largest winning bid found, within `tolerance` below the supremum of the winning region.
    ///
    /// `wins` must be monotone: winning at a bid implies winning at every lower bid.
    pub fn solve(self, mut wins: impl FnMut(f64) -> bool) -> Result<f64> {
        if !wins(self.lo) {
            return Err(Error::NotAWinner { agent: self.agent });
        }
        if wins(self.hi) {
            return Ok(self.hi);
        }
        let (mut lo, mut hi) = (self.lo, self.hi);
        while hi - lo > self.tolerance {
            let mid = 0.5 * (lo + hi);
            if wins(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// Prepared view of an instance: dense values, budget, participating agents.
#[derive(Debug, Clone)]
pub struct Market {
    pub values: ValueTable,
    pub budget: f64,
    pub ground: AgentSet,
}

impl Market {
    /// Fails with [`Error::NonMonotone`] for tables that are not monotone.
    pub fn new(instance: &Instance) -> Result<Self> {
        let values = instance.valuation().to_table();
        if !instance.valuation().is_monotone_by_construction() {
            ensure_monotone(&values, AgentSet::full(values.agents()))?;
        }
        Ok(Market {
            values,
            budget: instance.budget(),
            ground: instance.ground(),
        })
    }

    pub fn agents(&self) -> usize {
        self.values.agents()
    }
}

/// Source of additive functions `f` with `f(S) = v(S)` and `f ≤ v` below `S`.
#[derive(Debug, Clone)]
pub enum Witness {
    /// Clause lists, coverage, additive: read directly off the representation.
    Explicit(Valuation),
    /// Precomputed per subset (LP duals), indexed by mask.
    PerSet(Vec<Vec<f64>>),
}

impl Witness {
    /// Representation witness when available, otherwise the cover-LP duals of the table.
    pub fn for_valuation(v: &Valuation) -> Result<Self> {
        match v {
            Valuation::Additive { .. } | Valuation::Xos { .. } | Valuation::Coverage { .. } => {
                Ok(Witness::Explicit(v.clone()))
            }
            _ => Ok(Witness::PerSet(
                tilde_with_witnesses(&v.to_table())?.witnesses,
            )),
        }
    }

    pub fn at(&self, set: AgentSet) -> Vec<f64> {
        match self {
            Witness::Explicit(v) => {
                xos_defining_function(v, set).expect("explicit witness representation")
            }
            Witness::PerSet(w) => w[set.index()].clone(),
        }
    }
}

/// Most valuable participating agent bidding within budget; lowest id on ties.
pub(crate) fn most_valuable(
    values: &ValueTable,
    ground: AgentSet,
    bids: &[f64],
    budget: f64,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in ground.iter().filter(|&i| bids[i] <= budget) {
        let v = values.singleton(i);
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Agents of `ground` whose membership bit (position `base + 1 + i`) is set.
pub(crate) fn draw_sample(coins: &dyn Coins, ground: AgentSet, base: u32) -> AgentSet {
    ground
        .iter()
        .filter(|&i| coins.bit(base + 1 + i as u32))
        .collect()
}

/// Options shared by [`build`].
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Grid step of the budgeted-maximization algorithm (1 reproduces the 8-approximation grid).
    pub grid_step: f64,
    /// How the sampling step of the XOS mechanisms solves `OPT(T)`.
    pub opt_mode: OptMode,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            grid_step: 1.0,
            opt_mode: OptMode::Exact,
        }
    }
}

pub fn build(
    id: MechanismId,
    instance: &Instance,
    options: BuildOptions,
) -> Result<Box<dyn Mechanism>> {
    Ok(match id {
        MechanismId::Additive => Box::new(AdditiveMechanism::for_instance(instance)),
        MechanismId::XosSample => Box::new(XosSampleMechanism::new(instance, options.opt_mode)?),
        MechanismId::XosMain => Box::new(XosMainMechanism::new(instance, options.opt_mode)?),
        MechanismId::SaAlgMax => Box::new(SaAlgMaxRule::new(instance, options.grid_step)),
        MechanismId::SaSample => Box::new(SaSampleMechanism::new(instance, options.grid_step)),
        MechanismId::SaMain => Box::new(SaMainMechanism::new(instance, options.grid_step)),
        MechanismId::SaGap => Box::new(SaGapMechanism::new(instance)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_parse() {
        for id in MechanismId::ALL {
            assert_eq!(id.as_str().parse::<MechanismId>().unwrap(), id);
        }
        let err = "vcg".parse::<MechanismId>().unwrap_err();
        assert!(err.contains("xos-main"));
    }

    #[test]
    fn bisection_finds_step() {
        let theta = ThresholdQuery::new(0, 0.2, 2.0)
            .solve(|x| x <= 1.25)
            .unwrap();
        assert!(theta <= 1.25 && 1.25 - theta <= 2.0 * BISECTION);
        assert_eq!(
            ThresholdQuery::new(0, 0.2, 2.0).solve(|_| true).unwrap(),
            2.0
        );
        assert!(matches!(
            ThresholdQuery::new(3, 0.2, 2.0).solve(|_| false),
            Err(Error::NotAWinner { agent: 3 })
        ));
    }
}
