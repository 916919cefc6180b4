//! Monte Carlo experiments on random partitions and random subsets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{ensure_size, Error, Result};
use crate::subset::{AgentSet, MAX_AGENTS};
use crate::valuations::{SetFunction, Valuation};

fn bernoulli_sigma(p: f64, trials: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Uniformly random subset of `set` (each member kept with probability ½).
fn random_half(rng: &mut ChaCha8Rng, set: AgentSet) -> AgentSet {
    set.iter().filter(|_| rng.gen::<bool>()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionReport {
    /// `⌊v(S) / max_i v({i})⌋`.
    pub k: usize,
    pub trials: usize,
    /// Fraction of bipartitions whose both halves reach `(k−1)/(4k)·v(S)`.
    pub probability: f64,
    /// `½ − 3·√(¼/trials)`.
    pub floor: f64,
    pub passed: bool,
}

/// Random bipartitions of a set worth at least `k ≥ 2` times its best member.
pub fn bipartition_experiment<F: SetFunction + ?Sized>(
    v: &F,
    set: AgentSet,
    trials: usize,
    seed: u64,
) -> Result<PartitionReport> {
    let total = v.value(set);
    let best = set.iter().map(|i| v.singleton(i)).fold(0.0, f64::max);
    let k = if best > 0.0 {
        (total / best).floor() as usize
    } else {
        0
    };
    if k < 2 {
        return Err(Error::PreconditionUnmet(format!(
            "v(S) = {total} is less than twice the best single value {best}"
        )));
    }
    let target = (k - 1) as f64 / (4 * k) as f64 * total;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..trials)
        .filter(|_| {
            let half = random_half(&mut rng, set);
            v.value(half) >= target && v.value(set.difference(half)) >= target
        })
        .count();
    let probability = if trials > 0 {
        hits as f64 / trials as f64
    } else {
        0.0
    };
    let floor = 0.5 - 3.0 * bernoulli_sigma(0.5, trials.max(1));
    Ok(PartitionReport {
        k,
        trials,
        probability,
        floor,
        passed: probability >= floor,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub delta: f64,
    /// Frequency of `Z ≥ (1+δ)E[Z]`.
    pub upper: f64,
    /// `(e^δ/(1+δ)^{1+δ})^{E[Z]/v₀}`.
    pub upper_bound: f64,
    /// Frequency of `Z ≤ (1−δ)E[Z]`.
    pub lower: f64,
    /// `e^{−δ²E[Z]/(2v₀)}`.
    pub lower_bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub trials: usize,
    /// `E[Z]` for `Z = v(R)`, `R` uniform; exact by enumeration.
    pub mean: f64,
    /// `v₀ = max_i v({i})`.
    pub max_single: f64,
    pub rows: Vec<TailRow>,
}

impl ConcentrationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Tail frequencies of an XOS (or additive) value on uniformly random subsets against the
/// Chernoff-type bounds, at `δ ∈ {¼, ½, 1}`, each with `3σ` slack.
pub fn xos_concentration_experiment(
    v: &Valuation,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if !matches!(v, Valuation::Xos { .. } | Valuation::Additive { .. }) {
        return Err(Error::RepresentationUnsupported(v.kind()));
    }
    let n = v.agents();
    ensure_size(n, MAX_AGENTS)?;
    let all = AgentSet::full(n);
    let table = v.to_table();
    let mean = all.subsets().map(|s| table.value(s)).sum::<f64>() / (1u64 << n) as f64;
    let max_single = (0..n).map(|i| table.singleton(i)).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..trials)
        .map(|_| table.value(random_half(&mut rng, all)))
        .collect();
    let freq = |pred: &dyn Fn(f64) -> bool| {
        if trials == 0 {
            0.0
        } else {
            samples.iter().filter(|&&z| pred(z)).count() as f64 / trials as f64
        }
    };
    let ratio = if max_single > 0.0 {
        mean / max_single
    } else {
        0.0
    };
    let rows = [0.25, 0.5, 1.0]
        .into_iter()
        .map(|delta: f64| {
            let upper = freq(&|z| z >= (1.0 + delta) * mean);
            let lower = freq(&|z| z <= (1.0 - delta) * mean);
            let upper_bound = (delta.exp() / (1.0 + delta).powf(1.0 + delta)).powf(ratio);
            let lower_bound = (-0.5 * delta * delta * ratio).exp();
            let t = trials.max(1);
            let passed = upper <= upper_bound + 3.0 * bernoulli_sigma(upper_bound, t)
                && lower <= lower_bound + 3.0 * bernoulli_sigma(lower_bound, t);
            TailRow {
                delta,
                upper,
                upper_bound,
                lower,
                lower_bound,
                passed,
            }
        })
        .collect();
    Ok(ConcentrationReport {
        trials,
        mean,
        max_single,
        rows,
    })
}
