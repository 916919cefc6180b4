#![allow(dead_code)]

use std::cell::RefCell;

use bfm_core::harness::{corpus, GenKind, NamedInstance};
use bfm_core::{Coins, FixedTape};

/// The sweep corpus: 10 instances of every kind at every size 4..=8.
pub fn sweep_corpus() -> Vec<NamedInstance> {
    corpus(&GenKind::ALL, &[4, 5, 6, 7, 8], 10, 2024).expect("corpus generates")
}

pub fn is_xos_instance(named: &NamedInstance) -> bool {
    !named.id.starts_with(GenKind::SubadditiveTable.as_str())
}

/// Passes draws through and remembers them, so a run can be replayed on a [`FixedTape`].
pub struct Recording<'a> {
    inner: &'a dyn Coins,
    seen: RefCell<Vec<(u32, usize)>>,
}

impl<'a> Recording<'a> {
    pub fn new(inner: &'a dyn Coins) -> Self {
        Recording {
            inner,
            seen: RefCell::new(Vec::new()),
        }
    }

    pub fn frozen(&self) -> FixedTape {
        let mut tape = FixedTape::new();
        for &(pos, choice) in self.seen.borrow().iter() {
            tape.set(pos, choice);
        }
        tape
    }
}

impl Coins for Recording<'_> {
    fn choose(&self, pos: u32, weights: &[f64]) -> usize {
        let c = self.inner.choose(pos, weights);
        self.seen.borrow_mut().push((pos, c));
        c
    }
}
