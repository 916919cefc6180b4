use bfm_core::harness::{generate_instances, GenKind};
use bfm_core::lp::{solve_packing, PackingRow};
use bfm_core::lpcore::{dual_witness_additive, fractional_cover_value, tilde_valuation};
use bfm_core::{AgentSet, SetFunction, Valuation};

const DUAL: f64 = 1e-7;

fn valuations(n: usize) -> Vec<Valuation> {
    let mut out = Vec::new();
    for (k, kind) in GenKind::ALL.into_iter().enumerate() {
        out.extend(
            generate_instances(kind, n, 900 + k as u64, 3)
                .unwrap()
                .into_iter()
                .map(|i| i.valuation().clone()),
        );
    }
    out
}

/// Covering with arbitrary subsets `T` of the ground set (counting `T ∩ S`) gives the
/// same value as covering with subsets of `S` only, because `v` is monotone.
#[test]
fn unrestricted_columns_agree() {
    for n in [3, 4, 5, 6] {
        for v in valuations(n) {
            for set in AgentSet::full(n).subsets().filter(|s| !s.is_empty()) {
                let members: Vec<usize> = set.iter().collect();
                let compact = |t: AgentSet| -> u32 {
                    members
                        .iter()
                        .enumerate()
                        .filter(|(_, &i)| t.contains(i))
                        .fold(0, |acc, (k, _)| acc | 1 << k)
                };
                let rows: Vec<PackingRow> = AgentSet::full(n)
                    .subsets()
                    .filter(|t| !t.intersection(set).is_empty())
                    .map(|t| PackingRow {
                        support: compact(t),
                        rhs: v.value(t),
                    })
                    .collect();
                let wide = solve_packing(members.len(), &rows).objective;
                let narrow = fractional_cover_value(&v, set).unwrap().value;
                assert!(
                    (wide - narrow).abs() <= DUAL * narrow.max(1.0),
                    "n={n} S={set}: {wide} vs {narrow}"
                );
            }
        }
    }
}

/// Both certificates are feasible and their objectives coincide.
#[test]
fn certificates_are_feasible() {
    for n in [3, 4, 5, 6] {
        for v in valuations(n) {
            for set in AgentSet::full(n).subsets().filter(|s| !s.is_empty()) {
                let sol = fractional_cover_value(&v, set).unwrap();
                let y = &sol.dual.y;
                assert!(y.iter().all(|&p| p >= -DUAL));
                for t in set.subsets() {
                    assert!(t.sum(y) <= v.value(t) + DUAL, "dual infeasible on {t}");
                }
                for i in set.iter() {
                    assert!(
                        sol.primal.coverage_of(i) >= 1.0 - DUAL,
                        "agent {i} uncovered"
                    );
                }
                assert!((sol.primal.cost(&v) - sol.value).abs() <= DUAL * sol.value.max(1.0));
                assert!((set.sum(y) - sol.value).abs() <= DUAL * sol.value.max(1.0));
                assert!(sol.value <= v.value(set) + DUAL);
            }
        }
    }
}

#[test]
fn tilde_is_an_xos_lower_bound() {
    for v in valuations(5) {
        let tilde = tilde_valuation(&v).unwrap();
        for set in AgentSet::full(5).subsets() {
            let w = dual_witness_additive(&v, set).unwrap();
            assert!((set.sum(&w) - tilde.value(set)).abs() <= DUAL * tilde.value(set).max(1.0));
            // the witness is dominated by ṽ everywhere, so ṽ is the max of its witnesses
            for t in AgentSet::full(5).subsets() {
                assert!(t.intersection(set).sum(&w) <= tilde.value(t) + DUAL);
            }
            assert!(tilde.value(set) <= v.value(set) + DUAL);
        }
    }
}
