//! XOS mechanism run on the fractional-cover relaxation `ṽ`.
//!
//! `ṽ` is XOS and sandwiched as `v/I ≤ ṽ ≤ v`, so the XOS guarantee carries
//! over with a loss of the integrality gap `I`. Witnesses are the cover-LP duals.

use crate::error::Result;
use crate::instance::Instance;
use crate::lpcore::tilde_with_witnesses;
use crate::subset::AgentSet;
use crate::tape::Coins;

use super::xos::{XosMainMechanism, XosPipeline};
use super::{Allocation, Market, Mechanism, OptMode, Witness};

#[derive(Debug, Clone)]
pub struct SaGapMechanism {
    inner: XosMainMechanism,
}

impl SaGapMechanism {
    /// Solves the `2^n` cover LPs up front (`n ≤ 10`).
    pub fn new(instance: &Instance) -> Result<Self> {
        let market = Market::new(instance)?;
        let tilde = tilde_with_witnesses(&market.values)?;
        Ok(SaGapMechanism {
            inner: XosMainMechanism {
                pipeline: XosPipeline {
                    values: tilde.table,
                    witness: Witness::PerSet(tilde.witnesses),
                    budget: market.budget,
                    opt_mode: OptMode::Exact,
                },
                ground: market.ground,
                welfare: market.values,
                name: "sa-gap",
            },
        })
    }
}

impl Mechanism for SaGapMechanism {
    fn name(&self) -> &str {
        "sa-gap"
    }

    fn agents(&self) -> usize {
        self.inner.agents()
    }

    fn budget(&self) -> f64 {
        self.inner.budget()
    }

    fn allocate(&self, bids: &[f64], coins: &dyn Coins) -> Allocation {
        self.inner.allocate(bids, coins)
    }

    fn welfare(&self, winners: AgentSet) -> f64 {
        self.inner.welfare(winners)
    }
}
