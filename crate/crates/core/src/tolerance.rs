//! Numerical tolerances shared by every oracle, solver and check.

use serde::Serialize;

/// Absolute tolerance for value/surplus comparisons in the set-function oracles.
pub const ORACLE: f64 = 1e-9;
/// Dual feasibility slack accepted on LP witnesses.
pub const DUAL_FEASIBILITY: f64 = 1e-7;
/// Primal/dual objective agreement on every LP solve.
pub const LP_DUALITY: f64 = 1e-6;
/// Truthfulness slack, relative to the budget.
pub const TRUTHFULNESS: f64 = 1e-7;
/// Budget slack, relative to the budget.
pub const BUDGET: f64 = 1e-9;
/// Width of the final threshold-payment bracket, relative to the budget.
pub const BISECTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub oracle: f64,
    pub dual_feasibility: f64,
    pub lp_duality: f64,
    pub truthfulness: f64,
    pub budget: f64,
    pub bisection: f64,
}

impl Tolerances {
    pub const IN_FORCE: Tolerances = Tolerances {
        oracle: ORACLE,
        dual_feasibility: DUAL_FEASIBILITY,
        lp_duality: LP_DUALITY,
        truthfulness: TRUTHFULNESS,
        budget: BUDGET,
        bisection: BISECTION,
    };
}
