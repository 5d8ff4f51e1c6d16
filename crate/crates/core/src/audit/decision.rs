//! Threshold decision-maker over weighted numeric attributes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{AttributeRole, DatasetTable};
use crate::error::{Error, Result};

/// `y = 1` iff the weighted attribute sum clears the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    /// Weight per attribute name; keys must be non-protected numeric columns.
    pub weights: BTreeMap<String, f64>,
    /// The cutoff `psi`.
    pub cutoff: f64,
    /// Strict `>` when true (the default), `>=` otherwise.
    #[serde(default = "default_strict")]
    pub positive_if_strictly_greater: bool,
}

fn default_strict() -> bool {
    true
}

impl DecisionRule {
    pub fn score(&self, attribute_values: impl Fn(&str) -> Option<f64>) -> Result<f64> {
        let mut total = 0.0;
        for (name, weight) in &self.weights {
            let v = attribute_values(name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
            total += weight * v;
        }
        Ok(total)
    }

    pub fn decide(&self, score: f64) -> u8 {
        let positive = if self.positive_if_strictly_greater {
            score > self.cutoff
        } else {
            score >= self.cutoff
        };
        positive as u8
    }
}

/// Apply the rule to every row, replacing an existing outcome column or
/// appending one named `outcome_name`.
pub fn apply_decision_rule(
    table: &DatasetTable,
    rule: &DecisionRule,
    outcome_name: &str,
) -> Result<DatasetTable> {
    let mut weight_columns = Vec::with_capacity(rule.weights.len());
    for name in rule.weights.keys() {
        let idx = table
            .column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?;
        let column = &table.schema()[idx];
        if column.role != AttributeRole::NonProtected || !column.kind.is_numeric() {
            return Err(Error::Audit(format!(
                "decision rule attribute '{name}' must be a numeric non-protected column"
            )));
        }
        weight_columns.push((name.clone(), idx));
    }

    let mut outcomes = Vec::with_capacity(table.n());
    for row in 0..table.n() {
        let score = rule.score(|name| {
            weight_columns
                .iter()
                .find(|(n, _)| n == name)
                .and_then(|(_, idx)| table.value(row, *idx).as_num())
        })?;
        outcomes.push(rule.decide(score));
    }
    table.with_outcome(outcome_name, &outcomes)
}
