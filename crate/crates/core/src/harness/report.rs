use serde::Serialize;

use crate::error::Result;
use crate::mechanisms::{build, exact_expected_value, monte_carlo, BuildOptions, MechanismId};
use crate::valuations::brute_force_opt;

use super::generate::NamedInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum EvalMode {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub instance: String,
    pub mechanism: MechanismId,
    pub exact: bool,
    pub expected: f64,
    /// Standard error of a Monte Carlo estimate (0 when exact).
    pub std_error: f64,
    pub optimum: f64,
    /// `optimum / expected`; infinite when the mechanism earns nothing against a positive optimum.
    pub ratio: f64,
}

impl ExperimentRow {
    pub const CSV_HEADER: &'static str =
        "instance,mechanism,exact,expected,std_error,optimum,ratio";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.instance,
            self.mechanism,
            self.exact,
            self.expected,
            self.std_error,
            self.optimum,
            self.ratio
        )
    }
}

pub fn ratio(optimum: f64, expected: f64) -> f64 {
    if expected > 0.0 {
        optimum / expected
    } else if optimum > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// One row per instance: expected welfare, budgeted optimum and their ratio.
pub fn approximation_report(
    mechanism: MechanismId,
    instances: &[NamedInstance],
    mode: EvalMode,
    options: BuildOptions,
) -> Result<Vec<ExperimentRow>> {
    instances
        .iter()
        .map(|named| {
            let inst = &named.instance;
            let m = build(mechanism, inst, options)?;
            let (expected, std_error) = match mode {
                EvalMode::Exact => (exact_expected_value(m.as_ref(), inst.costs())?, 0.0),
                EvalMode::MonteCarlo { trials, seed } => {
                    let mc = monte_carlo(m.as_ref(), inst.costs(), seed, trials);
                    (mc.mean, mc.std_error)
                }
            };
            let optimum =
                brute_force_opt(inst.valuation(), inst.costs(), inst.budget(), inst.ground())?.1;
            Ok(ExperimentRow {
                instance: named.id.clone(),
                mechanism,
                exact: mode == EvalMode::Exact,
                expected,
                std_error,
                optimum,
                ratio: ratio(optimum, expected),
            })
        })
        .collect()
}

/// Rows as CSV with a header line.
pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = format!("{}\n", ExperimentRow::CSV_HEADER);
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}
