//! Budget-feasible mechanism for additive valuations.
//!
//! One fair coin picks between awarding the single agent of largest weight
//! and the proportional-share prefix rule: sort agents by bid per unit
//! weight and take the longest prefix whose last agent bids at most its
//! weight's share of the budget, `b(i_k) ≤ B·f(i_k)/f({i_1..i_k})`.
//! Both rules are monotone in each bid; payments are thresholds.

use crate::instance::Instance;
use crate::subset::AgentSet;
use crate::tape::Coins;
use crate::valuations::{SetFunction, Valuation, ValueTable};

use super::{Allocation, Branch, Diagnostics, Mechanism};

/// Allocation of the additive mechanism on `set` with weights `f`.
///
/// `greedy = false` selects the largest-weight agent (lowest id on ties) among
/// those bidding within budget; `greedy = true` runs the prefix rule. Agents
/// with zero weight never win the prefix rule.
pub fn additive_allocation(
    weights: &[f64],
    set: AgentSet,
    budget: f64,
    bids: &[f64],
    greedy: bool,
) -> AgentSet {
    if !greedy {
        let mut best: Option<usize> = None;
        for i in set.iter().filter(|&i| bids[i] <= budget) {
            if best.map_or(true, |b| weights[i] > weights[b]) {
                best = Some(i);
            }
        }
        return best.map_or(AgentSet::EMPTY, AgentSet::singleton);
    }

    let mut order: Vec<usize> = set.iter().filter(|&i| weights[i] > 0.0).collect();
    // ascending b/f; compare cross-multiplied to stay exact on ties
    order.sort_by(|&a, &b| {
        (bids[a] * weights[b])
            .partial_cmp(&(bids[b] * weights[a]))
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut prefix_weight = 0.0;
    let mut winners = 0;
    for (k, &i) in order.iter().enumerate() {
        prefix_weight += weights[i];
        if bids[i] * prefix_weight <= budget * weights[i] {
            winners = k + 1;
        }
    }
    order[..winners].iter().copied().collect()
}

/// Standalone additive mechanism over an instance's participating agents.
///
/// Weights are the instance's additive weights, or the singleton values
/// `v({i})` for any other representation. Coin position `branch_pos` picks the branch.
#[derive(Debug, Clone)]
pub struct AdditiveMechanism {
    weights: Vec<f64>,
    set: AgentSet,
    budget: f64,
    values: ValueTable,
    branch_pos: u32,
}

impl AdditiveMechanism {
    pub fn new(weights: Vec<f64>, set: AgentSet, budget: f64, values: ValueTable) -> Self {
        AdditiveMechanism {
            weights,
            set,
            budget,
            values,
            branch_pos: 0,
        }
    }

    pub fn for_instance(instance: &Instance) -> Self {
        let values = instance.valuation().to_table();
        let weights = match instance.valuation() {
            Valuation::Additive { weights } => weights.clone(),
            _ => (0..instance.agents())
                .map(|i| values.singleton(i))
                .collect(),
        };
        AdditiveMechanism::new(weights, instance.ground(), instance.budget(), values)
    }
}

impl Mechanism for AdditiveMechanism {
    fn name(&self) -> &str {
        "additive"
    }

    fn agents(&self) -> usize {
        self.weights.len()
    }

    fn budget(&self) -> f64 {
        self.budget
    }

    fn allocate(&self, bids: &[f64], coins: &dyn Coins) -> Allocation {
        let greedy = coins.bit(self.branch_pos);
        let winners = additive_allocation(&self.weights, self.set, self.budget, bids, greedy);
        Allocation {
            winners,
            posted_price: None,
            diagnostics: Diagnostics {
                branches: vec![if greedy {
                    Branch::AdditiveGreedy
                } else {
                    Branch::AdditiveMaxItem
                }],
                ..Diagnostics::default()
            },
        }
    }

    fn welfare(&self, winners: AgentSet) -> f64 {
        self.values.value(winners)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::run;
    use crate::tape::FixedTape;

    fn mechanism(weights: Vec<f64>, budget: f64) -> AdditiveMechanism {
        let inst = Instance::new(
            Valuation::additive(weights.clone()).unwrap(),
            vec![0.0; weights.len()],
            budget,
        )
        .unwrap();
        AdditiveMechanism::for_instance(&inst)
    }

    #[test]
    fn single_agent_paid_budget_on_both_branches() {
        let m = mechanism(vec![4.0], 2.0);
        for greedy in [false, true] {
            let out = run(&m, &[1.0], &FixedTape::from_bits(&[greedy])).unwrap();
            assert_eq!(out.winners, AgentSet::singleton(0));
            assert_eq!(out.payments, vec![2.0]);
        }
    }

    #[test]
    fn greedy_prefix_hand_trace() {
        let winners =
            additive_allocation(&[3.0, 2.0, 1.0], AgentSet::full(3), 2.0, &[1.0; 3], true);
        assert_eq!(winners, AgentSet::singleton(0));
    }

    #[test]
    fn greedy_threshold_matches_scan() {
        // Raising agent 0 past 1.5 moves agent 1 ahead, after which agent 0's
        // prefix condition (x ≤ 2·3/5) fails: the composed threshold is 1.5.
        let m = mechanism(vec![3.0, 2.0, 1.0], 2.0);
        let out = run(&m, &[1.0; 3], &FixedTape::from_bits(&[true])).unwrap();
        assert_eq!(out.winners, AgentSet::singleton(0));
        let scan = (0..=20_000)
            .map(|k| 1.0 + k as f64 * 1e-4)
            .take_while(|&x| {
                additive_allocation(
                    &[3.0, 2.0, 1.0],
                    AgentSet::full(3),
                    2.0,
                    &[x, 1.0, 1.0],
                    true,
                )
                .contains(0)
            })
            .last()
            .unwrap();
        assert!((out.payments[0] - 1.5).abs() < 1e-8);
        assert!((scan - 1.5).abs() < 1e-4);
        assert!(out.total_payment() <= 2.0);
    }

    #[test]
    fn zero_weights() {
        let set = AgentSet::full(3);
        assert_eq!(
            additive_allocation(&[0.0; 3], set, 1.0, &[0.5; 3], false),
            AgentSet::singleton(0)
        );
        assert_eq!(
            additive_allocation(&[0.0; 3], set, 1.0, &[0.5; 3], true),
            AgentSet::EMPTY
        );
    }

    #[test]
    fn empty_set() {
        assert!(additive_allocation(&[1.0], AgentSet::EMPTY, 1.0, &[0.1], true).is_empty());
        assert!(additive_allocation(&[1.0], AgentSet::EMPTY, 1.0, &[0.1], false).is_empty());
    }
}
