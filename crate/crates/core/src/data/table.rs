//! Typed tabular decision data.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::schema::{AttributeRole, AttributeSchema, ProtectedEncoding};
use crate::error::{Error, Result};

/// One cell: a number or a category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Cat(_) => None,
        }
    }

    /// Rendered form, as it would appear in a CSV cell.
    pub fn render(&self) -> String {
        match self {
            Value::Num(v) => format!("{v}"),
            Value::Cat(s) => s.clone(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Cat(s) => f.write_str(s),
        }
    }
}

/// A complainant-or-candidate view of one row: non-protected attributes,
/// protected values, and the binary outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualProfile {
    /// Index of the row in its table.
    pub row_id: usize,
    /// Non-protected attribute values, in schema order.
    pub x: Vec<Value>,
    /// Protected attribute values, in schema order of the protected columns.
    pub protected: Vec<Value>,
    /// Binary decision outcome.
    pub y: u8,
}

/// Immutable typed table with a per-column schema.
///
/// Construction validates the rows against the schema; afterwards the table
/// is safe to share across threads for concurrent reads.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTable {
    schema: Vec<AttributeSchema>,
    rows: Vec<Vec<Value>>,
}

impl DatasetTable {
    /// Build a table from a schema (ranges may be unset) and row values.
    ///
    /// Recomputes observed min/max for non-categorical columns and checks
    /// every cell against its declared kind.
    pub fn new(schema: Vec<AttributeSchema>, rows: Vec<Vec<Value>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoRows);
        }
        let mut table = DatasetTable { schema, rows };
        table.check_shape()?;
        table.recompute_ranges()?;
        table.check_roles()?;
        Ok(table)
    }

    fn check_shape(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.schema.len() {
                return Err(Error::Data(format!(
                    "row {i} has {} cells, schema has {} columns",
                    row.len(),
                    self.schema.len()
                )));
            }
        }
        Ok(())
    }

    fn check_roles(&self) -> Result<()> {
        let protected = self.protected_columns().count();
        let non_protected = self.non_protected_columns().count();
        if protected == 0 || non_protected == 0 {
            return Err(Error::Schema(
                "table needs at least one protected and one non-protected column".into(),
            ));
        }
        if self
            .schema
            .iter()
            .filter(|c| c.role == AttributeRole::Outcome)
            .count()
            > 1
        {
            return Err(Error::Schema("more than one outcome column".into()));
        }
        // Outcome values must be binary 0/1.
        if let Some(idx) = self.outcome_index() {
            for (r, row) in self.rows.iter().enumerate() {
                match row[idx].as_num() {
                    Some(v) if v == 0.0 || v == 1.0 => {}
                    _ => {
                        return Err(Error::Data(format!(
                            "row {r}: outcome column '{}' must be 0 or 1, got '{}'",
                            self.schema[idx].name, row[idx]
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    fn recompute_ranges(&mut self) -> Result<()> {
        for (c, column) in self.schema.iter_mut().enumerate() {
            if !column.kind.is_numeric() {
                column.observed_min = None;
                column.observed_max = None;
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (r, row) in self.rows.iter().enumerate() {
                let v = row[c].as_num().ok_or_else(|| Error::BadCell {
                    row: r,
                    column: column.name.clone(),
                    cell: row[c].render(),
                })?;
                if !v.is_finite() {
                    return Err(Error::BadCell {
                        row: r,
                        column: column.name.clone(),
                        cell: row[c].render(),
                    });
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
            column.observed_min = Some(lo);
            column.observed_max = Some(hi);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn value(&self, row: usize, column: usize) -> &Value {
        &self.rows[row][column]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn column_schema(&self, name: &str) -> Option<&AttributeSchema> {
        self.schema.iter().find(|c| c.name == name)
    }

    /// Numeric view of one column; errors on the first non-numeric cell.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        self.rows
            .iter()
            .map(|row| {
                row[idx].as_num().ok_or_else(|| Error::NonNumericNode {
                    node: name.to_string(),
                })
            })
            .collect()
    }

    pub fn protected_columns(&self) -> impl Iterator<Item = (usize, &AttributeSchema)> {
        self.schema
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == AttributeRole::Protected)
    }

    pub fn non_protected_columns(&self) -> impl Iterator<Item = (usize, &AttributeSchema)> {
        self.schema
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == AttributeRole::NonProtected)
    }

    pub fn outcome_index(&self) -> Option<usize> {
        self.schema
            .iter()
            .position(|c| c.role == AttributeRole::Outcome)
    }

    /// Extract per-row audit profiles. Requires an outcome column.
    pub fn profiles(&self) -> Result<Vec<IndividualProfile>> {
        let outcome = self
            .outcome_index()
            .ok_or_else(|| Error::Data("table has no outcome column".into()))?;
        let x_cols: Vec<usize> = self.non_protected_columns().map(|(i, _)| i).collect();
        let a_cols: Vec<usize> = self.protected_columns().map(|(i, _)| i).collect();
        Ok(self
            .rows
            .iter()
            .enumerate()
            .map(|(row_id, row)| IndividualProfile {
                row_id,
                x: x_cols.iter().map(|&i| row[i].clone()).collect(),
                protected: a_cols.iter().map(|&i| row[i].clone()).collect(),
                y: row[outcome].as_num().map(|v| v as u8).unwrap_or(0),
            })
            .collect())
    }

    /// Replace (or append) the outcome column with the given 0/1 values.
    pub(crate) fn with_outcome(&self, name: &str, values: &[u8]) -> Result<DatasetTable> {
        assert_eq!(values.len(), self.n());
        let mut schema = self.schema.clone();
        let mut rows = self.rows.clone();
        match self.outcome_index() {
            Some(idx) => {
                for (row, &y) in rows.iter_mut().zip(values) {
                    row[idx] = Value::Num(y as f64);
                }
            }
            None => {
                let mut column = AttributeSchema::new(
                    name,
                    crate::data::schema::AttributeKind::Ordinal,
                    AttributeRole::Outcome,
                );
                column.observed_min = None;
                column.observed_max = None;
                schema.push(column);
                for (row, &y) in rows.iter_mut().zip(values) {
                    row.push(Value::Num(y as f64));
                }
            }
        }
        DatasetTable::new(schema, rows)
    }
}

/// Recode a binary protected column so `protected_value` maps to 1 and the
/// other observed value to 0. The original labels are kept in the schema for
/// reporting.
pub fn encode_protected(
    table: &DatasetTable,
    protected_column: &str,
    protected_value: &str,
) -> Result<DatasetTable> {
    let idx = table
        .column_index(protected_column)
        .ok_or_else(|| Error::MissingColumn(protected_column.to_string()))?;

    let mut distinct: Vec<String> = Vec::new();
    for row in table.rows() {
        let rendered = row[idx].render();
        if !distinct.contains(&rendered) {
            distinct.push(rendered);
        }
        if distinct.len() > 2 {
            return Err(Error::Data(format!(
                "column '{protected_column}' has more than 2 distinct values"
            )));
        }
    }
    if !distinct.iter().any(|v| v == protected_value) {
        return Err(Error::Data(format!(
            "value '{protected_value}' not present in column '{protected_column}' \
             (observed: {})",
            distinct.join(", ")
        )));
    }
    let zero = distinct
        .iter()
        .find(|v| v.as_str() != protected_value)
        .cloned()
        // Degenerate single-valued column: everyone is in the protected group.
        .unwrap_or_else(|| format!("not-{protected_value}"));

    let mut schema = table.schema.clone();
    schema[idx].encoding = Some(ProtectedEncoding {
        one: protected_value.to_string(),
        zero,
    });
    let rows = table
        .rows
        .iter()
        .map(|row| {
            let mut row = row.clone();
            let bit = if row[idx].render() == protected_value {
                1.0
            } else {
                0.0
            };
            row[idx] = Value::Num(bit);
            row
        })
        .collect();
    DatasetTable::new(schema, rows)
}

/// Counts and shares of one column's distinct values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub column: String,
    /// (rendered value, count, share of n), sorted by rendered value.
    pub groups: Vec<(String, usize, f64)>,
}

/// Group statistics for every protected column and the outcome column.
pub fn summarize(table: &DatasetTable) -> Vec<GroupSummary> {
    let mut targets: Vec<usize> = table.protected_columns().map(|(i, _)| i).collect();
    if let Some(outcome) = table.outcome_index() {
        targets.push(outcome);
    }
    let n = table.n() as f64;
    targets
        .into_iter()
        .map(|idx| {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for row in table.rows() {
                *counts.entry(row[idx].render()).or_default() += 1;
            }
            GroupSummary {
                column: table.schema[idx].name.clone(),
                groups: counts
                    .into_iter()
                    .map(|(value, count)| (value, count, count as f64 / n))
                    .collect(),
            }
        })
        .collect()
}
