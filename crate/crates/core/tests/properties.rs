use proptest::prelude::*;

use bfm_core::harness::{check_outcome, generate_instances, GenKind};
use bfm_core::lpcore::fractional_cover_value;
use bfm_core::mechanisms::subadditive::sa_alg_max;
use bfm_core::mechanisms::{build, run, BuildOptions, MechanismId};
use bfm_core::valuations::{brute_force_opt, demand_set, is_subadditive, monotone_closure};
use bfm_core::{AgentSet, CoinTape, Instance, SetFunction, Valuation};

const TOL: f64 = 1e-9;
const LP_TOL: f64 = 1e-7;

fn kind() -> impl Strategy<Value = GenKind> {
    prop::sample::select(GenKind::ALL.to_vec())
}

/// A generated instance of `kind` on `n` agents with costs replaced by `costs`.
fn instance(kind: GenKind, n: usize, seed: u64, costs: &[f64]) -> Instance {
    let base = generate_instances(kind, n, seed, 1).unwrap().remove(0);
    base.with_costs(costs[..n].to_vec()).unwrap()
}

fn harmonic(k: usize) -> f64 {
    (1..=k).map(|j| 1.0 / j as f64).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_monotone_and_dominates(values in prop::collection::vec(0.0f64..10.0, 16)) {
        let mut values = values;
        values[0] = 0.0;
        let raw = Valuation::table(values.clone()).unwrap();
        let closed = monotone_closure(raw);
        for s in AgentSet::full(4).subsets() {
            prop_assert!(closed.value(s) >= values[s.index()]);
            for i in 0..4 {
                prop_assert!(closed.value(s.with(i)) >= closed.value(s));
            }
            let best_below = s.subsets().map(|t| values[t.index()]).fold(0.0, f64::max);
            prop_assert_eq!(closed.value(s), best_below);
        }
    }

    #[test]
    fn demand_set_maximizes_surplus(
        kind in kind(),
        n in 2usize..=6,
        seed in any::<u64>(),
        prices in prop::collection::vec(0.0f64..3.0, 6),
    ) {
        let v = instance(kind, n, seed, &[0.1; 6]).valuation().clone();
        let ground = AgentSet::full(n);
        let chosen = demand_set(&v, &prices, ground).unwrap();
        let surplus = |s: AgentSet| v.value(s) - s.sum(&prices);
        let best = ground.subsets().map(surplus).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(surplus(chosen) >= best - 2.0 * n as f64 * TOL);
    }

    #[test]
    fn alg_max_is_feasible_and_within_eight(
        kind in kind(),
        n in 2usize..=7,
        seed in any::<u64>(),
        costs in prop::collection::vec(0.05f64..1.5, 7),
    ) {
        let inst = instance(kind, n, seed, &costs);
        let (set, value) = sa_alg_max(inst.valuation(), inst.costs(), inst.budget(), inst.ground(), 1.0);
        prop_assert!(set.sum(inst.costs()) <= inst.budget() + TOL);
        prop_assert!(set.is_subset_of(inst.ground()));
        prop_assert_eq!(value, inst.valuation().value(set));
        let (_, opt) = brute_force_opt(inst.valuation(), inst.costs(), inst.budget(), inst.ground()).unwrap();
        prop_assert!(8.0 * value >= opt - TOL, "value {} vs optimum {}", value, opt);
    }

    #[test]
    fn cover_value_sandwiched(kind in kind(), n in 2usize..=6, seed in any::<u64>()) {
        let v = instance(kind, n, seed, &[0.1; 6]).valuation().clone();
        let subadditive = is_subadditive(&v).unwrap();
        for s in AgentSet::full(n).subsets() {
            let tilde = fractional_cover_value(&v, s).unwrap().value;
            prop_assert!(tilde <= v.value(s) + LP_TOL);
            if kind.is_xos() {
                prop_assert!((tilde - v.value(s)).abs() <= LP_TOL * v.value(s).max(1.0));
            }
            if subadditive {
                // greedy rounding of the fractional cover
                prop_assert!(v.value(s) <= harmonic(s.len()) * tilde + LP_TOL);
            }
        }
    }

    #[test]
    fn outcomes_are_budget_feasible_and_rational(
        kind in kind(),
        n in 2usize..=6,
        seed in any::<u64>(),
        tape in any::<u64>(),
        costs in prop::collection::vec(0.05f64..1.5, 6),
        which in 0usize..7,
    ) {
        let inst = instance(kind, n, seed, &costs);
        let id = MechanismId::ALL[which];
        let m = build(id, &inst, BuildOptions::default()).unwrap();
        let outcome = run(m.as_ref(), inst.costs(), &CoinTape::new(tape)).unwrap();
        let violations = check_outcome(&outcome, inst.costs(), inst.budget(), id.as_str(), tape);
        prop_assert!(violations.is_empty(), "{:?}", violations);
        for i in outcome.winners.iter() {
            prop_assert!(outcome.payments[i] >= inst.costs()[i] - TOL);
        }
        prop_assert_eq!(outcome.achieved_value, inst.valuation().value(outcome.winners));
    }
}
