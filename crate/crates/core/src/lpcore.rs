//! The fractional set-cover LP of a valuation and everything derived from it.
//!
//! For a set `S`, `ṽ(S)` is the cheapest fractional cover of `S` by subsets
//! weighted by their values. It is solved through its dual, the packing LP
//! `max Σ_{i∈S} y_i  s.t.  y(T) ≤ v(T)  ∀ T ⊆ S`, whose optimal `y` is an additive
//! function tight at `S` and dominated by `ṽ` on every subset of `S`.
//! Columns are limited to subsets of `S`: for monotone `v`, shrinking a cover
//! set to its intersection with `S` never raises its cost.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{ensure_size, Result};
use crate::lp::{solve_packing, PackingRow};
use crate::subset::AgentSet;
use crate::tolerance::LP_DUALITY;
use crate::valuations::{ensure_monotone, SetFunction, Valuation, ValueTable};

/// Largest set a single cover LP is solved for.
pub const MAX_COVER_SET: usize = 12;
/// Largest ground set for whole-table computations (`2^n` LPs).
pub const MAX_TABLE_AGENTS: usize = 10;

/// Optimal dual prices, one per agent, zero outside the covered set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualPrices {
    pub y: Vec<f64>,
}

/// Optimal primal cover: weight `α_j` per covering subset (zero weights omitted).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionalCover {
    pub weights: BTreeMap<AgentSet, f64>,
}

impl FractionalCover {
    /// `Σ_{j: i∈S_j} α_j` for agent `i`.
    pub fn coverage_of(&self, i: usize) -> f64 {
        self.weights
            .iter()
            .filter(|(s, _)| s.contains(i))
            .map(|(_, a)| a)
            .sum()
    }

    pub fn cost<F: SetFunction + ?Sized>(&self, v: &F) -> f64 {
        self.weights.iter().map(|(s, a)| a * v.value(*s)).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverSolution {
    /// `ṽ(S)`.
    pub value: f64,
    pub dual: DualPrices,
    pub primal: FractionalCover,
}

/// `ṽ(S)` with its primal cover and dual witness.
pub fn fractional_cover_value<F: SetFunction + ?Sized>(
    v: &F,
    set: AgentSet,
) -> Result<CoverSolution> {
    ensure_size(set.len(), MAX_COVER_SET)?;
    ensure_monotone(v, set)?;
    Ok(solve_cover(v, set))
}

fn solve_cover<F: SetFunction + ?Sized>(v: &F, set: AgentSet) -> CoverSolution {
    let n = v.agents();
    if set.is_empty() {
        return CoverSolution {
            value: 0.0,
            dual: DualPrices { y: vec![0.0; n] },
            primal: FractionalCover {
                weights: BTreeMap::new(),
            },
        };
    }
    let members: Vec<usize> = set.iter().collect();
    let s = members.len();
    let expand = |compact: u32| -> AgentSet {
        (0..s)
            .filter(|k| compact >> k & 1 == 1)
            .map(|k| members[k])
            .collect()
    };
    let rows: Vec<PackingRow> = (1u32..1 << s)
        .map(|c| PackingRow {
            support: c,
            rhs: v.value(expand(c)),
        })
        .collect();
    let sol = solve_packing(s, &rows);

    let mut y = vec![0.0; n];
    for (k, &i) in members.iter().enumerate() {
        y[i] = sol.y[k];
    }
    let weights: BTreeMap<AgentSet, f64> = sol
        .alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 1e-12)
        .map(|(j, &a)| (expand(j as u32 + 1), a))
        .collect();
    let primal = FractionalCover { weights };
    let value = sol.objective;
    debug_assert!(
        (primal.cost(v) - value).abs() <= LP_DUALITY * value.abs().max(1.0),
        "duality gap {} vs {}",
        primal.cost(v),
        value
    );
    CoverSolution {
        value,
        dual: DualPrices { y },
        primal,
    }
}

/// `I(S) = v(S)/ṽ(S)`, or 1 when `v(S) = 0`.
pub fn integrality_gap<F: SetFunction + ?Sized>(v: &F, set: AgentSet) -> Result<f64> {
    let value = v.value(set);
    if value == 0.0 {
        return Ok(1.0);
    }
    let tilde = fractional_cover_value(v, set)?.value;
    Ok(value / tilde)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapEntry {
    pub set: AgentSet,
    pub value: f64,
    pub tilde: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub per_set: Vec<GapEntry>,
    /// `I = max_S I(S)`.
    pub worst: f64,
}

impl GapReport {
    /// CSV with columns `mask,v,tilde_v,gap`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mask,v,tilde_v,gap\n");
        for e in &self.per_set {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.set.bits(),
                e.value,
                e.tilde,
                e.gap
            ));
        }
        out
    }
}

/// Precomputed `ṽ` for every subset, plus each subset's dual witness.
#[derive(Debug, Clone)]
pub struct TildeTable {
    pub table: ValueTable,
    pub witnesses: Vec<Vec<f64>>,
}

/// Solves all `2^n` cover LPs.
pub fn tilde_with_witnesses<F: SetFunction + ?Sized>(v: &F) -> Result<TildeTable> {
    let n = v.agents();
    ensure_size(n, MAX_TABLE_AGENTS)?;
    let all = AgentSet::full(n);
    ensure_monotone(v, all)?;
    let mut values = Vec::with_capacity(1 << n);
    let mut witnesses = Vec::with_capacity(1 << n);
    for s in all.subsets() {
        let sol = solve_cover(v, s);
        debug_assert!(sol.value <= v.value(s) + LP_DUALITY);
        // ṽ never exceeds v; clip LP round-off so the table stays exactly sandwiched.
        values.push(sol.value.clamp(0.0, v.value(s)));
        witnesses.push(sol.dual.y);
    }
    Ok(TildeTable {
        table: ValueTable::from_values(values)?,
        witnesses,
    })
}

/// `ṽ` as an explicit table valuation.
pub fn tilde_valuation<F: SetFunction + ?Sized>(v: &F) -> Result<Valuation> {
    Ok(tilde_with_witnesses(v)?.table.into_valuation())
}

/// Per-subset `v`, `ṽ`, `I(S)` and the worst gap `I`.
pub fn worst_gap<F: SetFunction + ?Sized>(v: &F) -> Result<GapReport> {
    let tilde = tilde_with_witnesses(v)?;
    let per_set: Vec<GapEntry> = AgentSet::full(v.agents())
        .subsets()
        .map(|s| {
            let value = v.value(s);
            let t = tilde.table.value(s);
            let gap = if value == 0.0 { 1.0 } else { value / t };
            GapEntry {
                set: s,
                value,
                tilde: t,
                gap,
            }
        })
        .collect();
    let worst = per_set.iter().map(|e| e.gap).fold(1.0, f64::max);
    Ok(GapReport { per_set, worst })
}

/// Optimal dual of the cover LP at `S`, zero outside `S`: tight at `S`, dominated by `ṽ` below.
pub fn dual_witness_additive<F: SetFunction + ?Sized>(v: &F, set: AgentSet) -> Result<Vec<f64>> {
    Ok(fractional_cover_value(v, set)?.dual.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn by_size_4() -> Valuation {
        Valuation::by_size(4, &[0.0, 1.0, 1.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn by_size_cover_value() {
        let sol = fractional_cover_value(&by_size_4(), AgentSet::full(4)).unwrap();
        assert!((sol.value - 4.0 / 3.0).abs() < 1e-9);
        for i in 0..4 {
            assert!(sol.primal.coverage_of(i) >= 1.0 - 1e-7);
        }
        assert!((sol.primal.cost(&by_size_4()) - sol.value).abs() < 1e-6);
    }

    #[test]
    fn singleton_cover_is_its_value() {
        let v = Valuation::xos(vec![vec![2.0, 0.0, 1.0], vec![0.0, 3.0, 1.5]]).unwrap();
        for i in 0..3 {
            let sol = fractional_cover_value(&v, AgentSet::singleton(i)).unwrap();
            assert!((sol.value - v.singleton(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_examples() {
        let gap = integrality_gap(&by_size_4(), AgentSet::full(4)).unwrap();
        assert!((gap - 1.5).abs() < 1e-9);
        let add = Valuation::additive(vec![1.0, 2.0, 3.0]).unwrap();
        for s in AgentSet::full(3).subsets() {
            assert!((integrality_gap(&add, s).unwrap() - 1.0).abs() < 1e-9);
        }
        let report = worst_gap(&by_size_4()).unwrap();
        assert!((report.worst - 1.5).abs() < 1e-9);
        let one = Valuation::additive(vec![4.0]).unwrap();
        assert_eq!(worst_gap(&one).unwrap().worst, 1.0);
    }

    #[test]
    fn by_size_dual_is_uniform_third() {
        let y = dual_witness_additive(&by_size_4(), AgentSet::full(4)).unwrap();
        for yi in &y {
            assert!((yi - 1.0 / 3.0).abs() < 1e-9, "{y:?}");
        }
    }

    #[test]
    fn tilde_of_by_size() {
        let tilde = tilde_valuation(&by_size_4()).unwrap();
        let v = by_size_4();
        for s in AgentSet::full(4).subsets() {
            let expect = if s.len() == 4 { 4.0 / 3.0 } else { v.value(s) };
            assert!((tilde.value(s) - expect).abs() < 1e-9, "{s}");
        }
    }

    #[test]
    fn non_monotone_rejected() {
        let bumpy = Valuation::table(vec![0.0, 2.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            fractional_cover_value(&bumpy, AgentSet::full(2)),
            Err(Error::NonMonotone { .. })
        ));
        assert!(tilde_valuation(&bumpy).is_err());
    }

    #[test]
    fn size_limits() {
        let big = Valuation::additive(vec![1.0; 11]).unwrap();
        assert!(matches!(
            worst_gap(&big),
            Err(Error::GroundSetTooLarge { .. })
        ));
        let huge = Valuation::additive(vec![1.0; 13]).unwrap();
        assert!(fractional_cover_value(&huge, AgentSet::full(13)).is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = worst_gap(&by_size_4()).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("mask,v,tilde_v,gap"));
        assert_eq!(csv.lines().count(), 17);
        assert!(csv.lines().last().unwrap().starts_with("15,2,"));
    }
}
