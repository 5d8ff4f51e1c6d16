//! Structural causal model over a user-declared DAG.
//!
//! The graph is supplied, not discovered. Each endogenous node gets a linear
//! additive-noise equation fitted by ordinary least squares; counterfactuals
//! come from the abduction / action / prediction procedure, which for this
//! model class yields a deterministic point counterfactual. Categorical
//! endogenous nodes and interventions on non-root nodes are unsupported.

mod graph;
mod model;
mod ols;
mod sample;

pub use graph::{CausalGraph, DagConfig};
pub use model::{fit_scm, AbductedNoise, ScmModel, StructuralEquation};
pub use ols::{least_squares, sample_std, LeastSquaresFit};
pub use sample::sample_from_scm;
