//! Reproducible random instances.
//!
//! Ranges: costs uniform in `[0.5, 2]`; budget uniform in
//! `[2, max(2, n/2)]` times the mean cost, so a handful of agents is
//! typically affordable, with every cost clipped to the budget.
//!
//! * additive — weights uniform in `[1, 10]`;
//! * xos — `2n` clauses, each weight nonzero with probability ½ and then uniform in `[0, 10]`;
//! * coverage — universe of `3n` elements, each agent covering 1–4 of them uniformly;
//! * subadditive-table — a by-size profile `⌈|S|/g⌉` (`g` uniform in `1..=max(1, n/2)`)
//!   plus a small random XOS tilt (⌈n/2⌉ clauses, weights up to `0.5`), then per-set
//!   noise in `[1, 1.02]` kept only if the result stays subadditive, and finally made
//!   monotone by closure (which preserves subadditivity).

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{ensure_size, Result};
use crate::instance::Instance;
use crate::subset::AgentSet;
use crate::valuations::{is_subadditive, monotone_closure, SetFunction, Valuation, MAX_PAIRWISE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Additive,
    Xos,
    Coverage,
    SubadditiveTable,
}

impl GenKind {
    pub const ALL: [GenKind; 4] = [
        GenKind::Additive,
        GenKind::Xos,
        GenKind::Coverage,
        GenKind::SubadditiveTable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GenKind::Additive => "additive",
            GenKind::Xos => "xos",
            GenKind::Coverage => "coverage",
            GenKind::SubadditiveTable => "subadditive-table",
        }
    }

    /// Whether generated valuations are XOS.
    pub fn is_xos(self) -> bool {
        !matches!(self, GenKind::SubadditiveTable)
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        GenKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown instance kind `{s}` (expected additive, xos, coverage or subadditive-table)"))
    }
}

/// An instance with a stable identifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedInstance {
    pub id: String,
    pub instance: Instance,
}

fn random_valuation(kind: GenKind, n: usize, rng: &mut ChaCha8Rng) -> Result<Valuation> {
    match kind {
        GenKind::Additive => {
            Valuation::additive((0..n).map(|_| rng.gen_range(1.0..=10.0)).collect())
        }
        GenKind::Xos => Valuation::xos(
            (0..2 * n)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            if rng.gen::<bool>() {
                                rng.gen_range(0.0..=10.0)
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect(),
        ),
        GenKind::Coverage => {
            let universe = 3 * n;
            let sets = (0..n)
                .map(|_| {
                    let size = rng.gen_range(1..=4usize.min(universe));
                    let mut s = sample(rng, universe, size).into_vec();
                    s.sort_unstable();
                    s
                })
                .collect();
            Valuation::coverage(sets, universe)
        }
        GenKind::SubadditiveTable => {
            let g = rng.gen_range(1..=(n / 2).max(1));
            let scale = rng.gen_range(0.0..=0.5);
            let clauses: Vec<Vec<f64>> = (0..n.div_ceil(2))
                .map(|_| (0..n).map(|_| scale * rng.gen::<f64>()).collect())
                .collect();
            let tilt = Valuation::xos(clauses)?.to_table();
            let all = AgentSet::full(n);
            let base: Vec<f64> = all
                .subsets()
                .map(|s| s.len().div_ceil(g) as f64 + tilt.value(s))
                .collect();
            for _ in 0..10 {
                let noisy: Vec<f64> = base
                    .iter()
                    .map(|&x| {
                        if x > 0.0 {
                            x * rng.gen_range(1.0..=1.02)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let candidate = Valuation::table(noisy)?;
                if is_subadditive(&candidate)? {
                    return Ok(monotone_closure(candidate).to_table().into_valuation());
                }
            }
            Valuation::table(base)
        }
    }
}

/// `count` instances of `kind` with `n` agents, reproducible per seed.
pub fn generate_instances(
    kind: GenKind,
    n: usize,
    seed: u64,
    count: usize,
) -> Result<Vec<Instance>> {
    ensure_size(n, MAX_PAIRWISE)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let valuation = random_valuation(kind, n, &mut rng)?;
            let mut costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..=2.0)).collect();
            let mean = costs.iter().sum::<f64>() / n as f64;
            let hi = (n as f64 / 2.0).max(2.0);
            let budget = mean * rng.gen_range(2.0..=hi);
            for c in &mut costs {
                *c = c.min(budget);
            }
            Instance::new(valuation, costs, budget)
        })
        .collect()
}

/// `per_size` instances of every kind at every size, ids `kind-n-index`.
pub fn corpus(
    kinds: &[GenKind],
    sizes: &[usize],
    per_size: usize,
    seed: u64,
) -> Result<Vec<NamedInstance>> {
    let mut out = Vec::new();
    for (a, &kind) in kinds.iter().enumerate() {
        for (b, &n) in sizes.iter().enumerate() {
            let sub_seed = seed ^ ((a as u64) << 40) ^ ((b as u64) << 32);
            for (k, instance) in generate_instances(kind, n, sub_seed, per_size)?
                .into_iter()
                .enumerate()
            {
                out.push(NamedInstance {
                    id: format!("{kind}-{n}-{k}"),
                    instance,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        for kind in GenKind::ALL {
            assert_eq!(
                generate_instances(kind, 6, 7, 5).unwrap(),
                generate_instances(kind, 6, 7, 5).unwrap()
            );
        }
    }

    #[test]
    fn tables_are_subadditive_and_monotone() {
        for inst in generate_instances(GenKind::SubadditiveTable, 7, 11, 20).unwrap() {
            assert!(is_subadditive(inst.valuation()).unwrap());
            let v = inst.valuation();
            assert!(
                crate::valuations::find_monotonicity_violation(v, AgentSet::full(v.agents()))
                    .is_none()
            );
        }
    }

    #[test]
    fn costs_within_budget() {
        for kind in GenKind::ALL {
            for inst in generate_instances(kind, 8, 3, 10).unwrap() {
                assert!(inst.costs().iter().all(|&c| c <= inst.budget()));
                assert_eq!(inst.dropped(), AgentSet::EMPTY);
            }
        }
    }

    #[test]
    fn size_limit() {
        assert!(generate_instances(GenKind::Additive, 13, 1, 1).is_err());
    }
}
