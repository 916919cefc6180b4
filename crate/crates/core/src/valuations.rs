//! Set-function representations and the exact oracles built on them.
//!
//! Every oracle here is brute force over subsets; ground sets are capped at
//! [`MAX_AGENTS`] agents and pairwise checks at [`MAX_PAIRWISE`].

use serde::{Deserialize, Serialize};

use crate::error::{ensure_size, Error, Result};
use crate::subset::{AgentSet, MAX_AGENTS};
use crate::tolerance::ORACLE;

/// Largest ground set for checks that enumerate pairs of subsets.
pub const MAX_PAIRWISE: usize = 12;

/// Anything that can report `v(S)`.
pub trait SetFunction {
    fn agents(&self) -> usize;
    fn value(&self, set: AgentSet) -> f64;

    fn singleton(&self, i: usize) -> f64 {
        self.value(AgentSet::singleton(i))
    }
}

/// A monotone nonnegative set function in one of five concrete representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Valuation {
    Additive {
        weights: Vec<f64>,
    },
    /// Clause-wise maximum of additive functions; each clause has one weight per agent.
    Xos {
        clauses: Vec<Vec<f64>>,
    },
    /// `v(S) = |∪_{i∈S} coverSets[i]|` over a universe `0..universeSize`.
    Coverage {
        #[serde(rename = "coverSets")]
        cover_sets: Vec<Vec<usize>>,
        #[serde(rename = "universeSize")]
        universe_size: usize,
    },
    /// Explicit value per subset mask.
    Table {
        values: Vec<f64>,
    },
    #[serde(rename = "closure")]
    MonotoneClosure {
        inner: Box<Valuation>,
    },
}

fn check_weights(what: &str, weights: &[f64]) -> Result<()> {
    match weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        Some(i) => Err(Error::InvalidValuation(format!(
            "{what}[{i}] = {} is not a nonnegative finite number",
            weights[i]
        ))),
        None => Ok(()),
    }
}

impl Valuation {
    pub fn additive(weights: Vec<f64>) -> Result<Self> {
        let v = Valuation::Additive { weights };
        v.validate()?;
        Ok(v)
    }

    pub fn xos(clauses: Vec<Vec<f64>>) -> Result<Self> {
        let v = Valuation::Xos { clauses };
        v.validate()?;
        Ok(v)
    }

    pub fn coverage(cover_sets: Vec<Vec<usize>>, universe_size: usize) -> Result<Self> {
        let v = Valuation::Coverage {
            cover_sets,
            universe_size,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        let v = Valuation::Table { values };
        v.validate()?;
        Ok(v)
    }

    /// Table whose value depends only on `|S|`: `by_size[k]` for sets of size `k`.
    pub fn by_size(n: usize, by_size: &[f64]) -> Result<Self> {
        ensure_size(n, MAX_AGENTS)?;
        if by_size.len() != n + 1 {
            return Err(Error::InvalidValuation(format!(
                "by-size profile needs {} entries, got {}",
                n + 1,
                by_size.len()
            )));
        }
        Valuation::table(
            AgentSet::full(n)
                .subsets()
                .map(|s| by_size[s.len()])
                .collect(),
        )
    }

    /// Structural checks: shapes agree, weights are nonnegative, `v(∅) = 0`.
    pub fn validate(&self) -> Result<()> {
        match self {
            Valuation::Additive { weights } => {
                ensure_size(weights.len(), MAX_AGENTS)?;
                check_weights("weights", weights)
            }
            Valuation::Xos { clauses } => {
                let Some(first) = clauses.first() else {
                    return Err(Error::InvalidValuation(
                        "xos needs at least one clause".into(),
                    ));
                };
                ensure_size(first.len(), MAX_AGENTS)?;
                for (j, clause) in clauses.iter().enumerate() {
                    if clause.len() != first.len() {
                        return Err(Error::InvalidValuation(format!(
                            "clause {j} has {} weights, clause 0 has {}",
                            clause.len(),
                            first.len()
                        )));
                    }
                    check_weights(&format!("clauses[{j}]"), clause)?;
                }
                Ok(())
            }
            Valuation::Coverage {
                cover_sets,
                universe_size,
            } => {
                ensure_size(cover_sets.len(), MAX_AGENTS)?;
                for (i, set) in cover_sets.iter().enumerate() {
                    if let Some(e) = set.iter().find(|&&e| e >= *universe_size) {
                        return Err(Error::InvalidValuation(format!(
                            "coverSets[{i}] contains element {e} outside universe of size {universe_size}"
                        )));
                    }
                }
                Ok(())
            }
            Valuation::Table { values } => {
                let len = values.len();
                if !len.is_power_of_two() {
                    return Err(Error::InvalidValuation(format!(
                        "table length {len} is not a power of two"
                    )));
                }
                ensure_size(len.trailing_zeros() as usize, MAX_AGENTS)?;
                check_weights("values", values)?;
                if values[0] != 0.0 {
                    return Err(Error::InvalidValuation(format!(
                        "table value of the empty set is {}, expected 0",
                        values[0]
                    )));
                }
                Ok(())
            }
            Valuation::MonotoneClosure { inner } => inner.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Valuation::Additive { .. } => "additive",
            Valuation::Xos { .. } => "xos",
            Valuation::Coverage { .. } => "coverage",
            Valuation::Table { .. } => "table",
            Valuation::MonotoneClosure { .. } => "closure",
        }
    }

    /// Monotone by construction (no check needed before use in a mechanism).
    pub fn is_monotone_by_construction(&self) -> bool {
        !matches!(self, Valuation::Table { .. })
    }

    /// Dense table of every subset value.
    pub fn to_table(&self) -> ValueTable {
        let n = self.agents();
        let values = match self {
            Valuation::Table { values } => values.clone(),
            Valuation::MonotoneClosure { inner } => {
                let mut values = inner.to_table().values;
                // Running max over one-element-smaller subsets, in ascending mask order.
                for mask in 1..values.len() {
                    let mut rest = mask;
                    while rest != 0 {
                        let low = rest & rest.wrapping_neg();
                        rest &= rest - 1;
                        let below = values[mask & !low];
                        if below > values[mask] {
                            values[mask] = below;
                        }
                    }
                }
                values
            }
            _ => AgentSet::full(n).subsets().map(|s| self.value(s)).collect(),
        };
        ValueTable { n, values }
    }
}

impl SetFunction for Valuation {
    fn agents(&self) -> usize {
        match self {
            Valuation::Additive { weights } => weights.len(),
            Valuation::Xos { clauses } => clauses.first().map_or(0, Vec::len),
            Valuation::Coverage { cover_sets, .. } => cover_sets.len(),
            Valuation::Table { values } => values.len().trailing_zeros() as usize,
            Valuation::MonotoneClosure { inner } => inner.agents(),
        }
    }

    fn value(&self, set: AgentSet) -> f64 {
        match self {
            Valuation::Additive { weights } => set.sum(weights),
            Valuation::Xos { clauses } => clauses.iter().map(|c| set.sum(c)).fold(0.0, f64::max),
            Valuation::Coverage {
                cover_sets,
                universe_size,
            } => {
                let mut covered = vec![false; *universe_size];
                for i in set.iter() {
                    for &e in &cover_sets[i] {
                        covered[e] = true;
                    }
                }
                covered.iter().filter(|&&c| c).count() as f64
            }
            Valuation::Table { values } => values[set.index()],
            Valuation::MonotoneClosure { inner } => {
                set.subsets().map(|t| inner.value(t)).fold(0.0, f64::max)
            }
        }
    }
}

/// Every subset value, indexed by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    n: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Valuation::table(values).map(|v| v.to_table())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_valuation(self) -> Valuation {
        Valuation::Table {
            values: self.values,
        }
    }
}

impl SetFunction for ValueTable {
    fn agents(&self) -> usize {
        self.n
    }

    #[inline]
    fn value(&self, set: AgentSet) -> f64 {
        self.values[set.index()]
    }
}

/// `v̂(S) = max_{T⊆S} v(T)`.
pub fn monotone_closure(v: Valuation) -> Valuation {
    Valuation::MonotoneClosure { inner: Box::new(v) }
}

/// Exhaustive monotonicity check; on failure returns the offending pair `(S, S ∪ {i})`.
pub fn find_monotonicity_violation<F: SetFunction + ?Sized>(
    v: &F,
    within: AgentSet,
) -> Option<(AgentSet, AgentSet)> {
    for s in within.subsets() {
        let vs = v.value(s);
        for i in within.difference(s).iter() {
            let larger = s.with(i);
            if vs > v.value(larger) + ORACLE {
                return Some((s, larger));
            }
        }
    }
    None
}

pub fn ensure_monotone<F: SetFunction + ?Sized>(v: &F, within: AgentSet) -> Result<()> {
    match find_monotonicity_violation(v, within) {
        Some((smaller, larger)) => Err(Error::NonMonotone { smaller, larger }),
        None => Ok(()),
    }
}

/// `v(S) + v(T) ≥ v(S ∪ T)` for every pair, within [`ORACLE`].
pub fn is_subadditive<F: SetFunction + ?Sized>(v: &F) -> Result<bool> {
    let n = v.agents();
    ensure_size(n, MAX_PAIRWISE)?;
    let all = AgentSet::full(n);
    let values: Vec<f64> = all.subsets().map(|s| v.value(s)).collect();
    for s in 0..values.len() {
        for t in s..values.len() {
            if values[s] + values[t] < values[s | t] - ORACLE {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Largest `v(S) - p(S)` over the sets in `family`, or `-∞` if the family is empty.
fn best_surplus(surplus: &[(AgentSet, f64)], family: impl Fn(AgentSet) -> bool) -> f64 {
    surplus
        .iter()
        .filter(|(s, _)| family(*s))
        .map(|&(_, u)| u)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Demand oracle with a fixed outcome.
///
/// Agents of `restriction` are decided in ascending id order: agent `i` is kept
/// iff the best surplus among still-allowed sets containing `i` beats the best
/// among those excluding it by more than [`ORACLE`]. Ties exclude.
pub fn demand_set<F: SetFunction + ?Sized>(
    v: &F,
    prices: &[f64],
    restriction: AgentSet,
) -> Result<AgentSet> {
    ensure_size(restriction.len(), MAX_AGENTS)?;
    let surplus: Vec<(AgentSet, f64)> = restriction
        .subsets()
        .map(|s| (s, v.value(s) - s.sum(prices)))
        .collect();
    let mut kept = AgentSet::EMPTY;
    let mut dropped = AgentSet::EMPTY;
    for i in restriction.iter() {
        let allowed = |s: AgentSet| kept.is_subset_of(s) && s.intersection(dropped).is_empty();
        let with_i = best_surplus(&surplus, |s| allowed(s) && s.contains(i));
        let without_i = best_surplus(&surplus, |s| allowed(s) && !s.contains(i));
        if with_i > without_i + ORACLE {
            kept = kept.with(i);
        } else {
            dropped = dropped.with(i);
        }
    }
    Ok(kept)
}

/// Smallest-mask set among those within [`ORACLE`] of the best score.
///
/// `score` returns `None` for sets that are not candidates.
pub fn fixed_argmax(
    universe: AgentSet,
    mut score: impl FnMut(AgentSet) -> Option<f64>,
) -> Option<(AgentSet, f64)> {
    let scored: Vec<(AgentSet, f64)> = universe
        .subsets()
        .filter_map(|s| score(s).map(|x| (s, x)))
        .collect();
    let best = scored
        .iter()
        .map(|&(_, x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    scored.into_iter().find(|&(_, x)| x >= best - ORACLE)
}

/// Exact budgeted optimum `max { v(S) : S ⊆ restriction, c(S) ≤ B }`, smallest mask on ties.
pub fn brute_force_opt<F: SetFunction + ?Sized>(
    v: &F,
    costs: &[f64],
    budget: f64,
    restriction: AgentSet,
) -> Result<(AgentSet, f64)> {
    ensure_size(restriction.len(), MAX_AGENTS)?;
    let feasible = |s: AgentSet| s.sum(costs) <= budget + ORACLE;
    Ok(
        fixed_argmax(restriction, |s| feasible(s).then(|| v.value(s)))
            .unwrap_or((AgentSet::EMPTY, 0.0)),
    )
}

/// Weights of a clause attaining `v(S)`; lowest clause index on ties.
pub fn xos_defining_function(v: &Valuation, set: AgentSet) -> Result<Vec<f64>> {
    match v {
        Valuation::Xos { clauses } => {
            let mut best = 0;
            let mut best_sum = f64::NEG_INFINITY;
            for (j, clause) in clauses.iter().enumerate() {
                let sum = set.sum(clause);
                if sum > best_sum {
                    best = j;
                    best_sum = sum;
                }
            }
            Ok(clauses[best].clone())
        }
        Valuation::Additive { weights } => Ok(weights.clone()),
        Valuation::Coverage {
            cover_sets,
            universe_size,
        } => Ok(coverage_defining_function(cover_sets, *universe_size, set)),
        other => Err(Error::RepresentationUnsupported(other.kind())),
    }
}

/// Each element covered by `set` is credited to its lowest-id coverer in `set`.
fn coverage_defining_function(
    cover_sets: &[Vec<usize>],
    universe_size: usize,
    set: AgentSet,
) -> Vec<f64> {
    let mut credited = vec![false; universe_size];
    let mut f = vec![0.0; cover_sets.len()];
    for i in set.iter() {
        for &e in &cover_sets[i] {
            if !credited[e] {
                credited[e] = true;
                f[i] += 1.0;
            }
        }
    }
    f
}
