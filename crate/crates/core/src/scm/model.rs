//! Structural causal model: fitting, abduction, and counterfactual
//! generation.
//!
//! Every endogenous node is an additive-noise linear equation
//! `x_j = intercept + sum(coef * parent) + u_j` fitted by ordinary least
//! squares. Abduction is then the residual identity
//! `u_j = x_j - prediction`, and a counterfactual is computed by replacing a
//! root node's value and recomputing descendants in topological order with
//! the abducted residuals held fixed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::data::DatasetTable;
use crate::error::{Error, Result};
use crate::scm::graph::CausalGraph;
use crate::scm::ols::least_squares;

/// Fitted linear additive-noise equation for one endogenous node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralEquation {
    pub target: String,
    pub intercept: f64,
    /// Coefficient per parent, keyed by parent name.
    pub coefficients: BTreeMap<String, f64>,
    /// Sample standard deviation of the fit residuals; drives synthetic
    /// sampling only, abduction never needs it.
    pub noise_std_dev: f64,
}

impl StructuralEquation {
    /// Deterministic prediction `intercept + sum(coef * parent value)`.
    /// Summation follows the sorted coefficient map, so two calls with equal
    /// inputs are bitwise identical.
    pub fn predict(&self, values: &BTreeMap<String, f64>) -> Result<f64> {
        let mut sum = self.intercept;
        for (parent, coefficient) in &self.coefficients {
            let v = values
                .get(parent)
                .ok_or_else(|| Error::MissingNodeValue(parent.clone()))?;
            sum += coefficient * v;
        }
        Ok(sum)
    }
}

/// Residuals abducted from one observed row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbductedNoise {
    pub row_id: usize,
    /// Residual per endogenous node.
    pub u: BTreeMap<String, f64>,
}

/// A causal graph together with one fitted equation per endogenous node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmModel {
    pub graph: CausalGraph,
    pub equations: BTreeMap<String, StructuralEquation>,
}

impl ScmModel {
    /// Assemble a model from explicit parts, checking that equations line up
    /// with the graph (exactly one per endogenous node, coefficients keyed by
    /// the node's parents).
    pub fn from_parts(
        graph: CausalGraph,
        equations: BTreeMap<String, StructuralEquation>,
    ) -> Result<Self> {
        for node in graph.endogenous() {
            let equation = equations
                .get(node)
                .ok_or_else(|| Error::Model(format!("no equation for endogenous node '{node}'")))?;
            let mut expected: Vec<&str> = graph.parents(node).iter().map(String::as_str).collect();
            expected.sort_unstable();
            let got: Vec<&str> = equation.coefficients.keys().map(String::as_str).collect();
            if expected != got {
                return Err(Error::Model(format!(
                    "equation for '{node}' keys {:?} do not match parents {:?}",
                    got, expected
                )));
            }
            if !equation.noise_std_dev.is_finite() || equation.noise_std_dev < 0.0 {
                return Err(Error::Model(format!(
                    "equation for '{node}' has invalid noise std dev"
                )));
            }
        }
        for target in equations.keys() {
            if graph.is_root(target) {
                return Err(Error::Model(format!(
                    "root '{target}' must not have an equation"
                )));
            }
            if !graph.nodes().contains(target) {
                return Err(Error::Model(format!(
                    "equation target '{target}' not in graph"
                )));
            }
        }
        Ok(ScmModel { graph, equations })
    }

    pub fn equation(&self, node: &str) -> Option<&StructuralEquation> {
        self.equations.get(node)
    }

    /// Pull the graph-node values out of one table row.
    pub fn node_values(
        &self,
        table: &DatasetTable,
        row_id: usize,
    ) -> Result<BTreeMap<String, f64>> {
        let mut values = BTreeMap::new();
        for node in self.graph.nodes() {
            let column = table
                .column_index(node)
                .ok_or_else(|| Error::MissingColumn(node.clone()))?;
            let v = table
                .value(row_id, column)
                .as_num()
                .ok_or_else(|| Error::NonNumericNode { node: node.clone() })?;
            values.insert(node.clone(), v);
        }
        Ok(values)
    }

    /// Abduct the noise terms of one profile via the additive-noise identity.
    pub fn abduct_values(&self, values: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
        let mut u = BTreeMap::new();
        for node in self.graph.endogenous() {
            let observed = values
                .get(node)
                .ok_or_else(|| Error::MissingNodeValue(node.to_string()))?;
            let predicted = self.equations[node].predict(values)?;
            u.insert(node.to_string(), observed - predicted);
        }
        Ok(u)
    }

    /// [`abduct_values`](Self::abduct_values) for a table row.
    pub fn abduct_row(&self, table: &DatasetTable, row_id: usize) -> Result<AbductedNoise> {
        let values = self.node_values(table, row_id)?;
        Ok(AbductedNoise {
            row_id,
            u: self.abduct_values(&values)?,
        })
    }

    /// Point counterfactual of one profile under a root intervention.
    ///
    /// Abduction, action, and prediction collapse to a per-node shift for
    /// additive-noise equations: each endogenous node becomes
    /// `x_j + (prediction with counterfactual parents - prediction with
    /// factual parents)`, walking the graph in topological order. Nodes whose
    /// parents are untouched keep their exact factual value, which makes the
    /// identity intervention and the abduction/prediction round trip exact
    /// rather than merely close.
    pub fn counterfactual(
        &self,
        values: &BTreeMap<String, f64>,
        node: &str,
        value: f64,
    ) -> Result<BTreeMap<String, f64>> {
        if !self.graph.is_root(node) {
            return Err(Error::InterventionNotRoot(node.to_string()));
        }
        self.propagate(values, Some((node, value)))
    }

    /// Prediction with abducted residuals and no intervention; reconstructs
    /// the observed values exactly.
    pub fn reconstruct(&self, values: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
        self.propagate(values, None)
    }

    fn propagate(
        &self,
        factual: &BTreeMap<String, f64>,
        intervention: Option<(&str, f64)>,
    ) -> Result<BTreeMap<String, f64>> {
        for node in self.graph.nodes() {
            if !factual.contains_key(node) {
                return Err(Error::MissingNodeValue(node.clone()));
            }
        }
        let mut result = factual.clone();
        if let Some((node, value)) = intervention {
            result.insert(node.to_string(), value);
        }
        for node in self.graph.topological_order()? {
            if self.graph.is_root(&node) {
                continue;
            }
            let equation = &self.equations[&node];
            let factual_prediction = equation.predict(factual)?;
            let adjusted_prediction = equation.predict(&result)?;
            let shifted = factual[&node] + (adjusted_prediction - factual_prediction);
            result.insert(node, shifted);
        }
        Ok(result)
    }

    /// Counterfactuals for every protected-group row (rows whose value of the
    /// intervened root is 1), ordered by row id. Row evaluations are
    /// independent; with the `parallel` feature and `parallel = true` they
    /// run on a thread pool and still yield the sequential result.
    pub fn counterfactual_dataset(
        &self,
        table: &DatasetTable,
        node: &str,
        value: f64,
        parallel: bool,
    ) -> Result<Vec<(usize, BTreeMap<String, f64>)>> {
        if !self.graph.is_root(node) {
            return Err(Error::InterventionNotRoot(node.to_string()));
        }
        let column = table
            .column_index(node)
            .ok_or_else(|| Error::MissingColumn(node.to_string()))?;
        let row_ids: Vec<usize> = (0..table.n())
            .filter(|&r| table.value(r, column).as_num() == Some(1.0))
            .collect();

        let evaluate = |&row_id: &usize| -> Result<(usize, BTreeMap<String, f64>)> {
            let values = self
                .node_values(table, row_id)
                .and_then(|v| self.counterfactual(&v, node, value))
                .map_err(|e| Error::Data(format!("row {row_id}: {e}")))?;
            Ok((row_id, values))
        };

        #[cfg(feature = "parallel")]
        if parallel {
            return row_ids.par_iter().map(evaluate).collect();
        }
        #[cfg(not(feature = "parallel"))]
        let _ = parallel;
        row_ids.iter().map(evaluate).collect()
    }
}

/// Fit one equation per endogenous node of `graph` on `table` by ordinary
/// least squares, in topological order.
pub fn fit_scm(table: &DatasetTable, graph: &CausalGraph) -> Result<ScmModel> {
    for node in graph.nodes() {
        if table.column_index(node).is_none() {
            return Err(Error::MissingColumn(node.clone()));
        }
    }
    // If the outcome column is in the graph it must be a sink.
    if let Some(outcome_idx) = table.outcome_index() {
        let outcome = &table.schema()[outcome_idx].name;
        if graph.nodes().contains(outcome) && !graph.children(outcome).is_empty() {
            return Err(Error::Graph(format!(
                "outcome node '{outcome}' must have no children"
            )));
        }
    }

    let mut columns: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for node in graph.nodes() {
        columns.insert(node.as_str(), table.numeric_column(node)?);
    }

    let mut equations = BTreeMap::new();
    for node in graph.topological_order()? {
        if graph.is_root(&node) {
            continue;
        }
        let parents = graph.parents(&node);
        let regressors: Vec<&[f64]> = parents
            .iter()
            .map(|p| columns[p.as_str()].as_slice())
            .collect();
        let fit = least_squares(&regressors, &columns[node.as_str()], &node)?;
        let coefficients: BTreeMap<String, f64> = parents
            .iter()
            .cloned()
            .zip(fit.coefficients.iter().copied())
            .collect();
        equations.insert(
            node.clone(),
            StructuralEquation {
                target: node.clone(),
                intercept: fit.intercept,
                coefficients,
                noise_std_dev: fit.residual_std,
            },
        );
    }
    Ok(ScmModel {
        graph: graph.clone(),
        equations,
    })
}
