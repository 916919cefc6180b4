//! Position-indexed mechanism randomness.
//!
//! A mechanism reads its coins at fixed positions (see each mechanism for its
//! layout), so a frozen tape replays the identical run, which is what the
//! threshold-payment bisection relies on. [`enumerate`] walks every reachable
//! assignment of the positions a run actually reads, yielding exact
//! expectations.

use std::cell::RefCell;
use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A source of categorical draws keyed by position.
pub trait Coins {
    /// Index drawn at `pos` from the (not necessarily normalized) `weights`.
    ///
    /// Reading the same position twice within one run must use the same weights.
    fn choose(&self, pos: u32, weights: &[f64]) -> usize;

    /// A fair bit at `pos`.
    fn bit(&self, pos: u32) -> bool {
        self.choose(pos, &[0.5, 0.5]) == 1
    }
}

/// Seeded, replayable tape; draw `pos` is the `pos`-th 64-bit word of a ChaCha8 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoinTape {
    seed: u64,
}

impl CoinTape {
    pub fn new(seed: u64) -> Self {
        CoinTape { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[0, 1)` at `pos`.
    pub fn uniform(&self, pos: u32) -> f64 {
        self.rng_at(pos).gen::<f64>()
    }

    fn rng_at(&self, pos: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(u128::from(pos) * 2);
        rng
    }
}

impl Coins for CoinTape {
    fn choose(&self, pos: u32, weights: &[f64]) -> usize {
        pick(weights, self.uniform(pos))
    }

    fn bit(&self, pos: u32) -> bool {
        self.rng_at(pos).next_u64() >> 63 == 1
    }
}

/// Inverse-CDF pick; never returns a zero-weight index.
fn pick(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

/// A tape with explicitly prescribed choices; unprescribed positions take index 0.
#[derive(Debug, Clone, Default)]
pub struct FixedTape {
    choices: BTreeMap<u32, usize>,
}

impl FixedTape {
    pub fn new() -> Self {
        FixedTape::default()
    }

    /// Bits at positions `0..bits.len()`.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut tape = FixedTape::new();
        for (pos, &b) in bits.iter().enumerate() {
            tape.set(pos as u32, usize::from(b));
        }
        tape
    }

    pub fn set(&mut self, pos: u32, choice: usize) -> &mut Self {
        self.choices.insert(pos, choice);
        self
    }

    pub fn set_bit(&mut self, pos: u32, bit: bool) -> &mut Self {
        self.set(pos, usize::from(bit))
    }
}

impl Coins for FixedTape {
    fn choose(&self, pos: u32, weights: &[f64]) -> usize {
        let c = self.choices.get(&pos).copied().unwrap_or(0);
        c.min(weights.len().saturating_sub(1))
    }
}

#[derive(Debug, Clone)]
struct Read {
    pos: u32,
    probability: f64,
    choice: usize,
    alternatives: Vec<(usize, f64)>,
    prescribed: bool,
}

/// Records every read; unprescribed positions take their first positive-weight index.
struct RecordingTape {
    prescribed: BTreeMap<u32, usize>,
    reads: RefCell<Vec<Read>>,
}

impl Coins for RecordingTape {
    fn choose(&self, pos: u32, weights: &[f64]) -> usize {
        if let Some(r) = self.reads.borrow().iter().find(|r| r.pos == pos) {
            return r.choice;
        }
        let total: f64 = weights.iter().sum();
        let prob = |i: usize| if total > 0.0 { weights[i] / total } else { 0.0 };
        let (choice, prescribed) = match self.prescribed.get(&pos) {
            Some(&c) => (c, true),
            None => (weights.iter().position(|&w| w > 0.0).unwrap_or(0), false),
        };
        let alternatives = if prescribed {
            Vec::new()
        } else {
            (0..weights.len())
                .filter(|&i| i != choice && weights[i] > 0.0)
                .map(|i| (i, prob(i)))
                .collect()
        };
        self.reads.borrow_mut().push(Read {
            pos,
            probability: prob(choice),
            choice,
            alternatives,
            prescribed,
        });
        choice
    }
}

/// Exact expectation of `f` over every coin outcome it can observe.
///
/// Depth-first over the decision tree: each run is a leaf weighted by the
/// product of its draw probabilities, and each free draw spawns one sibling
/// per alternative with all earlier draws pinned.
pub fn enumerate(mut f: impl FnMut(&dyn Coins) -> f64) -> f64 {
    let mut total = 0.0;
    let mut stack: Vec<(BTreeMap<u32, usize>, f64)> = vec![(BTreeMap::new(), 1.0)];
    while let Some((prescribed, prefix_prob)) = stack.pop() {
        let tape = RecordingTape {
            prescribed: prescribed.clone(),
            reads: RefCell::new(Vec::new()),
        };
        let value = f(&tape);
        let reads = tape.reads.into_inner();
        // Probability of the pinned prefix is carried in; multiply in the free draws.
        let mut pinned = prescribed;
        let mut running = prefix_prob;
        for read in &reads {
            if read.prescribed {
                continue;
            }
            for &(alt, p) in &read.alternatives {
                let mut child = pinned.clone();
                child.insert(read.pos, alt);
                stack.push((child, running * p));
            }
            pinned.insert(read.pos, read.choice);
            running *= read.probability;
        }
        total += running * value;
    }
    total
}
