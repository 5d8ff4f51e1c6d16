//! User-declared causal graph.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed acyclic graph over column names, with designated root nodes.
///
/// Roots are observed inputs (the protected attributes); they get no fitted
/// equation. Every other node is endogenous and is defined by its parents
/// plus an additive noise term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalGraph {
    nodes: Vec<String>,
    parents: BTreeMap<String, Vec<String>>,
    roots: BTreeSet<String>,
}

impl CausalGraph {
    /// Build and validate a graph. `spec` lists each node with its parents;
    /// nodes in `roots` must have no parents.
    pub fn new(spec: Vec<(String, Vec<String>)>, roots: Vec<String>) -> Result<Self> {
        let nodes: Vec<String> = spec.iter().map(|(n, _)| n.clone()).collect();
        let mut seen = BTreeSet::new();
        for node in &nodes {
            if !seen.insert(node.clone()) {
                return Err(Error::Graph(format!("duplicate node '{node}'")));
            }
        }
        let parents: BTreeMap<String, Vec<String>> = spec.into_iter().collect();
        let roots: BTreeSet<String> = roots.into_iter().collect();
        for root in &roots {
            if !seen.contains(root) {
                return Err(Error::Graph(format!(
                    "root '{root}' is not a declared node"
                )));
            }
            if !parents[root].is_empty() {
                return Err(Error::Graph(format!("root '{root}' must have no parents")));
            }
        }
        for (node, node_parents) in &parents {
            let mut unique = BTreeSet::new();
            for parent in node_parents {
                if !seen.contains(parent) {
                    return Err(Error::Graph(format!(
                        "node '{node}' has undeclared parent '{parent}'"
                    )));
                }
                if !unique.insert(parent) {
                    return Err(Error::Graph(format!(
                        "node '{node}' lists parent '{parent}' twice"
                    )));
                }
            }
        }
        let graph = CausalGraph {
            nodes,
            parents,
            roots,
        };
        graph.topological_order()?; // acyclicity
        Ok(graph)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn parents(&self, node: &str) -> &[String] {
        self.parents.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_root(&self, node: &str) -> bool {
        self.roots.contains(node)
    }

    pub fn roots(&self) -> impl Iterator<Item = &str> {
        self.roots.iter().map(String::as_str)
    }

    /// Endogenous (non-root) nodes in declaration order.
    pub fn endogenous(&self) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .filter(|n| !self.roots.contains(*n))
            .map(String::as_str)
    }

    pub fn children(&self, node: &str) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| self.parents(n).iter().any(|p| p == node))
            .map(String::as_str)
            .collect()
    }

    /// Canonical topological order (Kahn with lexicographic tie-breaking).
    /// Independent of declaration order, so two declarations of the same
    /// graph process nodes identically.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        let mut remaining_parents: BTreeMap<&str, BTreeSet<&str>> = self
            .nodes
            .iter()
            .map(|n| {
                (
                    n.as_str(),
                    self.parents(n).iter().map(String::as_str).collect(),
                )
            })
            .collect();
        let mut ready: BTreeSet<&str> = remaining_parents
            .iter()
            .filter(|(_, ps)| ps.is_empty())
            .map(|(n, _)| *n)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(&node) = ready.iter().next() {
            ready.remove(node);
            remaining_parents.remove(node);
            order.push(node.to_string());
            for (child, ps) in remaining_parents.iter_mut() {
                if ps.remove(node) && ps.is_empty() {
                    ready.insert(child);
                }
            }
        }
        if let Some((stuck, _)) = remaining_parents.into_iter().next() {
            return Err(Error::CycleDetected(stuck.to_string()));
        }
        Ok(order)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DagNode {
    name: String,
    #[serde(default)]
    parents: Vec<String>,
    #[serde(default)]
    root: bool,
}

/// DAG config file, read from TOML:
///
/// ```toml
/// [[node]]
/// name = "race"
/// root = true
///
/// [[node]]
/// name = "UGPA"
/// parents = ["race", "gender"]
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DagConfig {
    #[serde(rename = "node")]
    nodes: Vec<DagNode>,
}

impl DagConfig {
    pub fn from_toml(text: &str) -> Result<CausalGraph> {
        let config: DagConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("dag config: {e}")))?;
        let roots = config
            .nodes
            .iter()
            .filter(|n| n.root)
            .map(|n| n.name.clone())
            .collect();
        let spec = config
            .nodes
            .into_iter()
            .map(|n| (n.name, n.parents))
            .collect();
        CausalGraph::new(spec, roots)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<CausalGraph> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}
