//! Discrimination test execution: decision rule, proportion comparison,
//! and the per-complainant audit pipelines.

mod decision;
mod run;
mod stats;

pub use decision::{apply_decision_rule, DecisionRule};
pub use run::{
    run_cst, run_cst_with, run_st, run_st_with, AuditOptions, AuditReport, AuditRun, CaseResult,
    CenterAlignment, ComparatorCenter, Method, TestConfig,
};
pub use stats::{compute_delta_p, normal_quantile, wald_interval};
