//! Mechanism for correlated cost priors given as finite scenario lists.
//!
//! Coin layout:
//!
//! | position        | meaning                                          |
//! |-----------------|--------------------------------------------------|
//! | `0`             | 0 = most valuable agent paid `B`, 1 = sampling   |
//! | `1 + i`         | agent `i` joins the sample `T`                   |
//! | `n + 1`         | draw of the conditional cost vector `d`          |
//! | `n + 2 …`       | nested XOS mechanism on `ṽ` (its own layout)     |
//!
//! The draw of `d` reads one position whose outcome depends only on the sample,
//! the bids inside it and the candidate set, so every agent that stays a
//! candidate faces the same `d` whatever it bids.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_size, Error, Result};
use crate::lpcore::{tilde_with_witnesses, MAX_TABLE_AGENTS};
use crate::mechanisms::expectation::trial_seeds;
use crate::mechanisms::xos::XosPipeline;
use crate::mechanisms::{
    draw_sample, exact_expected_value, most_valuable, run, Allocation, Branch, Diagnostics,
    Mechanism, MonteCarlo, OptMode, Outcome, Witness,
};
use crate::subset::{AgentSet, MAX_AGENTS};
use crate::tape::{CoinTape, Coins};
use crate::tolerance::ORACLE;
use crate::valuations::{
    brute_force_opt, ensure_monotone, fixed_argmax, SetFunction, Valuation, ValueTable,
};

/// Largest ground set for [`expected_optimal`].
pub const MAX_OPT_AGENTS: usize = 16;

/// Positions the Monte Carlo drivers use to draw scenarios; far above any mechanism's coins.
const REALIZED_POS: u32 = u32::MAX;
const VIRTUAL_POS: u32 = u32::MAX - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub prob: f64,
    pub costs: Vec<f64>,
}

/// Finitely supported joint distribution over cost vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioDistribution {
    scenarios: Vec<Scenario>,
}

impl ScenarioDistribution {
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self> {
        let schema = |field: String, message: String| Error::Schema {
            field,
            line: None,
            message,
        };
        let first = scenarios.first().ok_or_else(|| {
            schema(
                "scenarios".into(),
                "at least one scenario is required".into(),
            )
        })?;
        let n = first.costs.len();
        for (k, s) in scenarios.iter().enumerate() {
            if !(s.prob.is_finite() && s.prob > 0.0) {
                return Err(schema(
                    format!("scenarios[{k}].prob"),
                    format!("{} is not positive", s.prob),
                ));
            }
            if s.costs.len() != n {
                return Err(schema(
                    format!("scenarios[{k}].costs"),
                    format!("expected {n} costs, got {}", s.costs.len()),
                ));
            }
            if let Some(i) = s.costs.iter().position(|c| !c.is_finite() || *c < 0.0) {
                return Err(schema(
                    format!("scenarios[{k}].costs[{i}]"),
                    format!("{} is not a nonnegative finite number", s.costs[i]),
                ));
            }
        }
        let total: f64 = scenarios.iter().map(|s| s.prob).sum();
        if (total - 1.0).abs() > ORACLE {
            return Err(schema(
                "scenarios".into(),
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        Ok(ScenarioDistribution { scenarios })
    }

    pub fn point_mass(costs: Vec<f64>) -> Self {
        ScenarioDistribution {
            scenarios: vec![Scenario { prob: 1.0, costs }],
        }
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn agents(&self) -> usize {
        self.scenarios[0].costs.len()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.prob).collect()
    }

    /// Scenario index drawn at `pos`.
    pub fn draw(&self, coins: &dyn Coins, pos: u32) -> usize {
        coins.choose(pos, &self.probabilities())
    }
}

/// The event a conditional cost vector is drawn under.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEvent {
    /// Sample `T`; costs must agree with `anchor_costs` on it.
    pub sample: AgentSet,
    pub anchor_costs: Vec<f64>,
    pub threshold: f64,
    /// `S*`, which must maximize `v(S) − t·d(S)` over `universe ∖ T`.
    pub target: AgentSet,
    pub universe: AgentSet,
}

impl ConditionEvent {
    fn admits<F: SetFunction + ?Sized>(&self, v: &F, costs: &[f64]) -> bool {
        if self
            .sample
            .iter()
            .any(|i| (costs[i] - self.anchor_costs[i]).abs() > ORACLE)
        {
            return false;
        }
        let score = |s: AgentSet| v.value(s) - self.threshold * s.sum(costs);
        let rest = self.universe.difference(self.sample);
        let best = rest.subsets().map(score).fold(f64::NEG_INFINITY, f64::max);
        score(self.target) >= best - ORACLE
    }
}

/// Probabilities of the scenarios admitted by `event` (zero for the rest), unnormalized.
pub fn conditional_weights<F: SetFunction + ?Sized>(
    dist: &ScenarioDistribution,
    event: &ConditionEvent,
    v: &F,
) -> Vec<f64> {
    dist.scenarios
        .iter()
        .map(|s| {
            if event.admits(v, &s.costs) {
                s.prob
            } else {
                0.0
            }
        })
        .collect()
}

/// Draws `d ∼ D | event` with a single categorical draw at `pos`.
pub fn sample_conditional<F: SetFunction + ?Sized>(
    dist: &ScenarioDistribution,
    event: &ConditionEvent,
    v: &F,
    coins: &dyn Coins,
    pos: u32,
) -> Result<Vec<f64>> {
    let weights = conditional_weights(dist, event, v);
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::EmptyConditionalSupport);
    }
    Ok(dist.scenarios[coins.choose(pos, &weights)].costs.clone())
}

/// `E_c[v(OPT(c))]`, agents costing more than the budget left out per scenario.
pub fn expected_optimal(dist: &ScenarioDistribution, v: &Valuation, budget: f64) -> Result<f64> {
    ensure_size(v.agents(), MAX_OPT_AGENTS)?;
    let table = v.to_table();
    let mut total = 0.0;
    for s in &dist.scenarios {
        let ground = affordable(&s.costs, budget);
        total += s.prob * brute_force_opt(&table, &s.costs, budget, ground)?.1;
    }
    Ok(total)
}

fn affordable(costs: &[f64], budget: f64) -> AgentSet {
    (0..costs.len()).filter(|&i| costs[i] <= budget).collect()
}

#[derive(Debug)]
struct Shared {
    values: ValueTable,
    tilde: XosPipeline,
    dist: ScenarioDistribution,
    budget: f64,
}

/// The Bayesian mechanism for one prior; [`BayesianMechanism::for_costs`] fixes the participating agents.
#[derive(Debug, Clone)]
pub struct BayesianMechanism {
    shared: Arc<Shared>,
    ground: AgentSet,
    /// When set, the threshold comes from these costs on `T` instead of the bids (the prior-sampling strawman).
    virtual_costs: Option<Vec<f64>>,
}

impl BayesianMechanism {
    /// For XOS-capable representations `ṽ = v` and the representation supplies the
    /// witnesses; otherwise all `2^n` cover LPs are solved (`n ≤ 10`).
    pub fn new(valuation: &Valuation, dist: ScenarioDistribution, budget: f64) -> Result<Self> {
        let n = valuation.agents();
        ensure_size(n, MAX_AGENTS)?;
        valuation.validate()?;
        if dist.agents() != n {
            return Err(Error::Schema {
                field: "scenarios".into(),
                line: None,
                message: format!(
                    "cost vectors have {} entries, valuation has {n} agents",
                    dist.agents()
                ),
            });
        }
        let values = valuation.to_table();
        if !valuation.is_monotone_by_construction() {
            ensure_monotone(&values, AgentSet::full(n))?;
        }
        let (tilde_values, witness) = match valuation {
            Valuation::Additive { .. } | Valuation::Xos { .. } | Valuation::Coverage { .. } => {
                (values.clone(), Witness::Explicit(valuation.clone()))
            }
            _ => {
                ensure_size(n, MAX_TABLE_AGENTS)?;
                let t = tilde_with_witnesses(&values)?;
                (t.table, Witness::PerSet(t.witnesses))
            }
        };
        Ok(BayesianMechanism {
            shared: Arc::new(Shared {
                values,
                tilde: XosPipeline {
                    values: tilde_values,
                    witness,
                    budget,
                    opt_mode: OptMode::Exact,
                },
                dist,
                budget,
            }),
            ground: AgentSet::full(n),
            virtual_costs: None,
        })
    }

    /// Same prior with the agents affordable under `costs` participating.
    pub fn for_costs(&self, costs: &[f64]) -> Self {
        BayesianMechanism {
            ground: affordable(costs, self.shared.budget),
            ..self.clone()
        }
    }

    /// Strawman: the threshold is learned from `costs` (a virtual draw from the prior) on the sample.
    pub fn with_virtual_threshold(&self, costs: Vec<f64>) -> Self {
        BayesianMechanism {
            virtual_costs: Some(costs),
            ..self.clone()
        }
    }

    pub fn distribution(&self) -> &ScenarioDistribution {
        &self.shared.dist
    }

    /// `ṽ` as allocated on in the nested XOS run.
    pub fn tilde_values(&self) -> &ValueTable {
        &self.shared.tilde.values
    }

    pub fn values(&self) -> &ValueTable {
        &self.shared.values
    }
}

impl Mechanism for BayesianMechanism {
    fn name(&self) -> &str {
        if self.virtual_costs.is_some() {
            "bayes-prior-sample"
        } else {
            "bayes"
        }
    }

    fn agents(&self) -> usize {
        self.shared.values.agents()
    }

    fn budget(&self) -> f64 {
        self.shared.budget
    }

    fn allocate(&self, bids: &[f64], coins: &dyn Coins) -> Allocation {
        let sh = &*self.shared;
        let n = self.agents() as u32;
        let mut diagnostics = Diagnostics::default();
        if !coins.bit(0) {
            diagnostics.branches.push(Branch::MaxItem);
            return match most_valuable(&sh.values, self.ground, bids, sh.budget) {
                Some(i) => Allocation {
                    winners: AgentSet::singleton(i),
                    posted_price: Some(sh.budget),
                    diagnostics,
                },
                None => Allocation::empty(diagnostics),
            };
        }

        let sample = draw_sample(coins, self.ground, 0);
        let learn_from = self.virtual_costs.as_deref().unwrap_or(bids);
        let opt = brute_force_opt(&sh.values, learn_from, sh.budget, sample)
            .expect("sample within enumeration limits")
            .1;
        let t = opt / (8.0 * sh.budget);
        let rest = self.ground.difference(sample);
        let candidates = fixed_argmax(rest, |s| Some(sh.values.value(s) - t * s.sum(bids)))
            .map_or(AgentSet::EMPTY, |(s, _)| s);
        diagnostics.branches.push(Branch::Sampling);
        diagnostics.sample = Some(sample);
        diagnostics.sample_value = Some(opt);
        diagnostics.threshold = Some(t);
        diagnostics.candidates = Some(candidates);

        let event = ConditionEvent {
            sample,
            anchor_costs: bids.to_vec(),
            threshold: t,
            target: candidates,
            universe: self.ground,
        };
        let d = match sample_conditional(&sh.dist, &event, &sh.values, coins, n + 1) {
            Ok(d) => d,
            Err(_) => {
                diagnostics.conditional_fallback = true;
                bids.to_vec()
            }
        };
        let d_total = candidates.sum(&d);
        diagnostics.sampled_costs = Some(d.clone());

        let winners = if d_total < sh.budget {
            diagnostics.branches.push(Branch::SampledCosts);
            candidates.iter().filter(|&i| bids[i] <= d[i]).collect()
        } else {
            diagnostics.branches.push(Branch::TildeXos);
            let mut nested = Diagnostics::default();
            let (winners, _) = sh.tilde.main(candidates, bids, coins, n + 2, &mut nested);
            diagnostics.nested = Some(Box::new(nested));
            diagnostics.tilde_value = Some(sh.tilde.values.value(winners));
            winners
        };
        Allocation {
            winners,
            // thresholds of the composed rule; a nested posted price would overpay
            posted_price: None,
            diagnostics,
        }
    }

    fn welfare(&self, winners: AgentSet) -> f64 {
        self.shared.values.value(winners)
    }
}

/// Exact `E_{c∼D}[v(winners)]` over scenarios, coins and conditional draws.
pub fn bayesian_expected_value(mechanism: &BayesianMechanism) -> Result<f64> {
    let mut total = 0.0;
    for s in mechanism.distribution().scenarios() {
        total += s.prob * exact_expected_value(&mechanism.for_costs(&s.costs), &s.costs)?;
    }
    Ok(total)
}

/// Monte Carlo estimate: each trial draws the realized costs and the coins from one derived seed.
pub fn bayesian_monte_carlo(mechanism: &BayesianMechanism, seed: u64, trials: usize) -> MonteCarlo {
    let dist = mechanism.distribution();
    MonteCarlo::from_samples(trial_seeds(seed, trials).map(|s| {
        let tape = CoinTape::new(s);
        let costs = &dist.scenarios()[dist.draw(&tape, REALIZED_POS)].costs;
        let m = mechanism.for_costs(costs);
        m.welfare(m.allocate(costs, &tape).winners)
    }))
}

/// One run: draws the realized costs from the tape, then allocates and pays at truthful bids.
pub fn bayesian_run(
    mechanism: &BayesianMechanism,
    coins: &dyn Coins,
) -> Result<(Vec<f64>, Outcome)> {
    let dist = mechanism.distribution();
    let costs = dist.scenarios()[dist.draw(coins, REALIZED_POS)]
        .costs
        .clone();
    let outcome = run(&mechanism.for_costs(&costs), &costs, coins)?;
    Ok((costs, outcome))
}

/// The correlated family with `2^k` agents, `v(S) = |S|`, `B = 2^k`, and all
/// costs equal to `2^j` with probability `2^{j−k−1}` (`j = 0..=k`), or to the
/// unaffordable `2^{k+1}` with probability `2^{−k−1}`.
///
/// `agents` truncates the ground set (the family nominally has `2^k` agents).
pub fn k_family(k: u32, agents: usize) -> Result<(Valuation, ScenarioDistribution, f64)> {
    ensure_size(agents, MAX_AGENTS)?;
    let budget = f64::from(1u32 << k);
    let mut scenarios: Vec<Scenario> = (0..=k)
        .map(|j| Scenario {
            prob: 0.5f64.powi((k + 1 - j) as i32),
            costs: vec![f64::from(1u32 << j); agents],
        })
        .collect();
    scenarios.push(Scenario {
        prob: 0.5f64.powi(k as i32 + 1),
        costs: vec![2.0 * budget; agents],
    });
    Ok((
        Valuation::additive(vec![1.0; agents])?,
        ScenarioDistribution::new(scenarios)?,
        budget,
    ))
}

/// One row of the prior-sampling comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorSampleRow {
    pub k: u32,
    pub agents: usize,
    pub trials: usize,
    pub expected_opt: f64,
    pub mechanism: MonteCarlo,
    pub strawman: MonteCarlo,
    /// `E[OPT]/E[M]` (infinite when `E[M] = 0`).
    pub mechanism_ratio: f64,
    pub strawman_ratio: f64,
}

impl PriorSampleRow {
    pub const CSV_HEADER: &'static str =
        "k,agents,trials,expected_opt,mechanism_value,mechanism_se,strawman_value,strawman_se,mechanism_ratio,strawman_ratio";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.agents,
            self.trials,
            self.expected_opt,
            self.mechanism.mean,
            self.mechanism.std_error,
            self.strawman.mean,
            self.strawman.std_error,
            self.mechanism_ratio,
            self.strawman_ratio
        )
    }
}

fn ratio(opt: f64, value: f64) -> f64 {
    if value > 0.0 {
        opt / value
    } else if opt > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Mechanism versus the strawman that learns its threshold from an independent virtual
/// draw of the prior. Both read the same tape (common random numbers); `None` when `trials = 0`.
pub fn prior_sample_experiment(
    valuation: &Valuation,
    dist: &ScenarioDistribution,
    budget: f64,
    trials: usize,
    seed: u64,
) -> Result<Option<(f64, MonteCarlo, MonteCarlo)>> {
    if trials == 0 {
        return Ok(None);
    }
    let expected_opt = expected_optimal(dist, valuation, budget)?;
    let base = BayesianMechanism::new(valuation, dist.clone(), budget)?;
    let mut honest = Vec::with_capacity(trials);
    let mut straw = Vec::with_capacity(trials);
    for s in trial_seeds(seed, trials) {
        let tape = CoinTape::new(s);
        let costs = &dist.scenarios()[dist.draw(&tape, REALIZED_POS)].costs;
        let virtual_costs = dist.scenarios()[dist.draw(&tape, VIRTUAL_POS)]
            .costs
            .clone();
        let m = base.for_costs(costs);
        honest.push(m.welfare(m.allocate(costs, &tape).winners));
        let w = m.with_virtual_threshold(virtual_costs);
        straw.push(w.welfare(w.allocate(costs, &tape).winners));
    }
    Ok(Some((
        expected_opt,
        MonteCarlo::from_samples(honest),
        MonteCarlo::from_samples(straw),
    )))
}

/// The comparison on the `k`-family for each `k`; families wider than
/// `max_agents` are truncated to that many agents.
pub fn prior_sample_k_family(
    ks: &[u32],
    max_agents: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<PriorSampleRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        let agents = (1usize << k).min(max_agents);
        let (v, dist, budget) = k_family(k, agents)?;
        if let Some((expected_opt, mechanism, strawman)) =
            prior_sample_experiment(&v, &dist, budget, trials, seed)?
        {
            rows.push(PriorSampleRow {
                k,
                agents,
                trials,
                expected_opt,
                mechanism_ratio: ratio(expected_opt, mechanism.mean),
                strawman_ratio: ratio(expected_opt, strawman.mean),
                mechanism,
                strawman,
            });
        }
    }
    Ok(rows)
}
