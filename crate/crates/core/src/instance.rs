use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::subset::AgentSet;
use crate::valuations::{SetFunction, Valuation};

/// One procurement problem: valuation, true costs and budget.
///
/// Agents whose cost exceeds the budget can never win a budget-feasible
/// truthful mechanism; they stay indexed but are left out of [`Instance::ground`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    valuation: Valuation,
    costs: Vec<f64>,
    budget: f64,
    #[serde(skip)]
    ground: AgentSet,
}

impl Instance {
    pub fn new(valuation: Valuation, costs: Vec<f64>, budget: f64) -> Result<Self> {
        valuation.validate()?;
        let n = valuation.agents();
        if costs.len() != n {
            return Err(Error::Schema {
                field: "costs".into(),
                line: None,
                message: format!("expected {n} costs, got {}", costs.len()),
            });
        }
        if let Some(i) = costs.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Schema {
                field: format!("costs[{i}]"),
                line: None,
                message: format!("{} is not a nonnegative finite number", costs[i]),
            });
        }
        if !budget.is_finite() || budget <= 0.0 {
            return Err(Error::Schema {
                field: "budget".into(),
                line: None,
                message: format!("{budget} is not a positive finite number"),
            });
        }
        let ground: AgentSet = (0..n).filter(|&i| costs[i] <= budget).collect();
        let dropped = AgentSet::full(n).difference(ground);
        if !dropped.is_empty() {
            warn!("agents {dropped} cost more than the budget {budget} and are dropped");
        }
        Ok(Instance {
            valuation,
            costs,
            budget,
            ground,
        })
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn agents(&self) -> usize {
        self.costs.len()
    }

    /// Agents that take part (cost within budget).
    pub fn ground(&self) -> AgentSet {
        self.ground
    }

    pub fn dropped(&self) -> AgentSet {
        AgentSet::full(self.agents()).difference(self.ground)
    }

    /// Same valuation and budget with another cost vector.
    pub fn with_costs(&self, costs: Vec<f64>) -> Result<Self> {
        Instance::new(self.valuation.clone(), costs, self.budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_over_budget_agents() {
        let v = Valuation::additive(vec![1.0, 2.0, 3.0]).unwrap();
        let inst = Instance::new(v, vec![1.0, 5.0, 2.0], 2.0).unwrap();
        assert_eq!(inst.ground(), [0, 2].into_iter().collect());
        assert_eq!(inst.dropped(), AgentSet::singleton(1));
    }

    #[test]
    fn rejects_shape_errors() {
        let v = Valuation::additive(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            Instance::new(v.clone(), vec![1.0], 2.0),
            Err(Error::Schema { field, .. }) if field == "costs"
        ));
        assert!(Instance::new(v.clone(), vec![1.0, -1.0], 2.0).is_err());
        assert!(Instance::new(v, vec![1.0, 1.0], 0.0).is_err());
    }
}
