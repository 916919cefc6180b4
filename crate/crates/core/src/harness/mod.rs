//! Property-test drivers and experiments.

pub mod checks;
pub mod experiments;
pub mod generate;
pub mod report;
pub mod strawmen;

pub use checks::{
    check_budget_ir_transfers, check_candidates_stable, check_outcome,
    check_tilde_covers_threshold, check_universal_truthfulness, check_witness_covers_threshold,
    ClaimFailure, Violation, ViolationKind, ViolationReport,
};
pub use experiments::{
    bipartition_experiment, xos_concentration_experiment, ConcentrationReport, PartitionReport,
};
pub use generate::{corpus, generate_instances, GenKind, NamedInstance};
pub use report::{approximation_report, rows_to_csv, EvalMode, ExperimentRow};
pub use strawmen::{OverBudget, PayYourBid};
