//! Testing individual discrimination claims over tabular decision data.
//!
//! The library audits a decision process one complainant at a time. For every
//! member of the protected group it builds two neighborhoods with a
//! protected-blind Gower distance — a control group of similar protected
//! individuals and a test group of similar non-protected individuals — and
//! compares the share of negative decisions between the two. Two comparator
//! constructions are supported:
//!
//! * **`st`** (situation testing): the test group is centered on the
//!   complainant's own attributes, i.e. the ideal comparator differs only in
//!   the protected attribute.
//! * **`cst`** (counterfactual situation testing): the test group is centered
//!   on the complainant's counterfactual attributes generated from a fitted
//!   structural causal model, so downstream effects of the protected
//!   attribute on the other attributes are adjusted for.
//!
//! The crate is organized along the pipeline: [`data`] ingests and types the
//! table, [`scm`] fits the structural causal model and generates
//! counterfactuals, [`similarity`] provides the Gower distance and k-NN
//! search, [`audit`] runs the per-complainant tests and aggregates reports,
//! and [`cli`] wires everything into reproducible, config-driven runs.

pub mod audit;
pub mod cli;
pub mod data;
mod error;
pub mod scm;
pub mod similarity;

pub use audit::{
    apply_decision_rule, compute_delta_p, run_cst, run_cst_with, run_st, run_st_with,
    wald_interval, AuditOptions, AuditReport, AuditRun, CaseResult, CenterAlignment, DecisionRule,
    Method, TestConfig,
};
pub use data::{
    encode_protected, load_csv, summarize, write_csv, AttributeKind, AttributeRole,
    AttributeSchema, DatasetTable, IndividualProfile, MissingValuePolicy, SchemaConfig, Value,
};
pub use error::{Error, Result};
pub use scm::{CausalGraph, DagConfig, ScmModel, StructuralEquation};
pub use similarity::{
    gower, knn, knn_with, ContinuousScale, DistanceSpec, Neighborhood, NeighborhoodCenter, TieBreak,
};
