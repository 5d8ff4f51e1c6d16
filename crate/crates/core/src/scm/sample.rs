//! Synthetic data generation from a structural causal model.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{AttributeKind, AttributeRole, AttributeSchema, DatasetTable, Value};
use crate::error::{Error, Result};
use crate::scm::model::ScmModel;

/// Draw `n` rows from the model.
///
/// Root nodes are sampled as Bernoulli 0/1 with the given per-root
/// probability of drawing 1; endogenous nodes follow their structural
/// equation plus Gaussian noise scaled by the fitted `noise_std_dev`.
///
/// Sampling is reproducible: one ChaCha stream seeded by `seed`, consumed
/// row by row — roots in graph declaration order, then endogenous nodes in
/// canonical topological order. The same seed yields a bit-identical table.
///
/// The returned schema marks roots as protected and endogenous nodes as
/// non-protected continuous columns; there is no outcome column until a
/// decision rule is applied.
pub fn sample_from_scm(
    model: &ScmModel,
    n: usize,
    seed: u64,
    root_probabilities: &BTreeMap<String, f64>,
) -> Result<DatasetTable> {
    if n == 0 {
        return Err(Error::Data("sample size must be positive".into()));
    }
    for root in model.graph.roots() {
        match root_probabilities.get(root) {
            Some(p) if (0.0..=1.0).contains(p) => {}
            Some(_) => {
                return Err(Error::Data(format!(
                    "root '{root}' probability outside [0, 1]"
                )))
            }
            None => {
                return Err(Error::Data(format!(
                    "no Bernoulli probability given for root '{root}'"
                )))
            }
        }
    }

    let declaration_roots: Vec<&str> = model
        .graph
        .nodes()
        .iter()
        .filter(|node| model.graph.is_root(node))
        .map(String::as_str)
        .collect();
    let topological: Vec<String> = model.graph.topological_order()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<Value>> = Vec::with_capacity(n);
    let mut values: BTreeMap<String, f64> = BTreeMap::new();
    for _ in 0..n {
        values.clear();
        for &root in &declaration_roots {
            let bit = if rng.random::<f64>() < root_probabilities[root] {
                1.0
            } else {
                0.0
            };
            values.insert(root.to_string(), bit);
        }
        for node in &topological {
            if model.graph.is_root(node) {
                continue;
            }
            let equation = &model.equations[node];
            let z: f64 = StandardNormal.sample(&mut rng);
            let drawn = equation.predict(&values)? + equation.noise_std_dev * z;
            values.insert(node.clone(), drawn);
        }
        rows.push(
            model
                .graph
                .nodes()
                .iter()
                .map(|node| Value::Num(values[node]))
                .collect(),
        );
    }

    let schema = model
        .graph
        .nodes()
        .iter()
        .map(|node| {
            if model.graph.is_root(node) {
                AttributeSchema::new(
                    node.clone(),
                    AttributeKind::Categorical,
                    AttributeRole::Protected,
                )
            } else {
                AttributeSchema::new(
                    node.clone(),
                    AttributeKind::Continuous,
                    AttributeRole::NonProtected,
                )
            }
        })
        .collect();
    DatasetTable::new(schema, rows)
}
