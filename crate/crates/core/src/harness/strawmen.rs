//! Deliberately broken mechanisms: negative controls for the checks.

use crate::error::{Error, Result};
use crate::mechanisms::{Allocation, Mechanism};
use crate::subset::AgentSet;
use crate::tape::Coins;

/// Same allocation, but each winner is paid its own bid (first-price).
pub struct PayYourBid(pub Box<dyn Mechanism>);

impl Mechanism for PayYourBid {
    fn name(&self) -> &str {
        "pay-your-bid"
    }

    fn agents(&self) -> usize {
        self.0.agents()
    }

    fn budget(&self) -> f64 {
        self.0.budget()
    }

    fn allocate(&self, bids: &[f64], coins: &dyn Coins) -> Allocation {
        self.0.allocate(bids, coins)
    }

    fn welfare(&self, winners: AgentSet) -> f64 {
        self.0.welfare(winners)
    }

    fn payment(
        &self,
        bids: &[f64],
        _coins: &dyn Coins,
        agent: usize,
        allocation: &Allocation,
    ) -> Result<f64> {
        if !allocation.winners.contains(agent) {
            return Err(Error::NotAWinner { agent });
        }
        Ok(bids[agent])
    }
}

/// Same allocation, but each winner is paid twice the budget.
pub struct OverBudget(pub Box<dyn Mechanism>);

impl Mechanism for OverBudget {
    fn name(&self) -> &str {
        "over-budget"
    }

    fn agents(&self) -> usize {
        self.0.agents()
    }

    fn budget(&self) -> f64 {
        self.0.budget()
    }

    fn allocate(&self, bids: &[f64], coins: &dyn Coins) -> Allocation {
        self.0.allocate(bids, coins)
    }

    fn welfare(&self, winners: AgentSet) -> f64 {
        self.0.welfare(winners)
    }

    fn payment(
        &self,
        _bids: &[f64],
        _coins: &dyn Coins,
        agent: usize,
        allocation: &Allocation,
    ) -> Result<f64> {
        if !allocation.winners.contains(agent) {
            return Err(Error::NotAWinner { agent });
        }
        Ok(2.0 * self.budget())
    }
}
