//! Agent subsets as bit masks over a ground set of at most [`MAX_AGENTS`] agents.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Hard cap on the number of agents; every subset fits in a `u32` mask.
pub const MAX_AGENTS: usize = 20;

/// A set of agents, agent `i` being bit `i`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentSet(u32);

impl AgentSet {
    pub const EMPTY: AgentSet = AgentSet(0);

    pub const fn from_bits(bits: u32) -> Self {
        AgentSet(bits)
    }

    /// All agents `0..n`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_AGENTS);
        AgentSet(((1u64 << n) - 1) as u32)
    }

    pub fn singleton(i: usize) -> Self {
        AgentSet(1 << i)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        AgentSet(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Self {
        AgentSet(self.0 & !(1 << i))
    }

    pub fn union(self, other: Self) -> Self {
        AgentSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        AgentSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        AgentSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in ascending id order.
    pub fn iter(self) -> Members {
        Members(self.0)
    }

    /// Every subset of `self`, in ascending mask order, starting with the empty set.
    pub fn subsets(self) -> Subsets {
        Subsets {
            universe: self.0,
            next: Some(0),
        }
    }

    /// Sum of `weights[i]` over members.
    pub fn sum(self, weights: &[f64]) -> f64 {
        // `Sum` for floats starts at -0.0; start at +0.0 so empty sums print as 0
        self.iter().fold(0.0, |acc, i| acc + weights[i])
    }
}

impl FromIterator<usize> for AgentSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(AgentSet::EMPTY, AgentSet::with)
    }
}

impl fmt::Debug for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for AgentSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for AgentSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let ids = Vec::<usize>::deserialize(deserializer)?;
        if let Some(&bad) = ids.iter().find(|&&i| i >= MAX_AGENTS) {
            return Err(serde::de::Error::custom(format!(
                "agent id {bad} exceeds the {MAX_AGENTS}-agent limit"
            )));
        }
        Ok(ids.into_iter().collect())
    }
}

pub struct Members(u32);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Members {}

pub struct Subsets {
    universe: u32,
    next: Option<u32>,
}

impl Iterator for Subsets {
    type Item = AgentSet;

    fn next(&mut self) -> Option<AgentSet> {
        let cur = self.next?;
        self.next = if cur == self.universe {
            None
        } else {
            Some(cur.wrapping_sub(self.universe) & self.universe)
        };
        Some(AgentSet(cur))
    }
}
