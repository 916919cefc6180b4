use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{ensure_size, Result};
use crate::lpcore::MAX_TABLE_AGENTS;
use crate::tape::{enumerate, CoinTape};

use super::Mechanism;

/// Exact `E[v(winners)]` over every coin outcome the mechanism can observe.
pub fn exact_expected_value(mechanism: &dyn Mechanism, bids: &[f64]) -> Result<f64> {
    ensure_size(mechanism.agents(), MAX_TABLE_AGENTS)?;
    Ok(enumerate(|coins| {
        mechanism.welfare(mechanism.allocate(bids, coins).winners)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub trials: usize,
    pub mean: f64,
    #[serde(rename = "stdError")]
    pub std_error: f64,
}

impl MonteCarlo {
    /// Mean and standard error of a sample.
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Self {
        let (mut count, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for x in samples {
            count += 1;
            let delta = x - mean;
            mean += delta / count as f64;
            m2 += delta * (x - mean);
        }
        let std_error = if count > 1 {
            (m2 / (count - 1) as f64 / count as f64).sqrt()
        } else {
            0.0
        };
        MonteCarlo {
            trials: count,
            mean,
            std_error,
        }
    }

    /// `|mean − exact| ≤ sigmas · stdError`; a zero-variance sample must match to rounding.
    pub fn agrees_with(&self, exact: f64, sigmas: f64) -> bool {
        (self.mean - exact).abs() <= sigmas * self.std_error + 1e-9 * exact.abs().max(1.0)
    }
}

/// Per-trial tape seeds derived from one master seed.
pub fn trial_seeds(seed: u64, trials: usize) -> impl Iterator<Item = u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(move |_| rng.next_u64())
}

/// Monte Carlo estimate of `E[v(winners)]` over `trials` independent tapes.
pub fn monte_carlo(
    mechanism: &dyn Mechanism,
    bids: &[f64],
    seed: u64,
    trials: usize,
) -> MonteCarlo {
    MonteCarlo::from_samples(
        trial_seeds(seed, trials)
            .map(|s| mechanism.welfare(mechanism.allocate(bids, &CoinTape::new(s)).winners)),
    )
}
