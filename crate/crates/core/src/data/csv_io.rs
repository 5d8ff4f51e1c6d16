//! CSV ingestion and writing.
//!
//! Input files are RFC-4180 style, UTF-8, with a mandatory header row. Lines
//! starting with `#` are treated as comments so that files written by the CLI
//! (which carry a provenance comment) can be read back.

use std::io;
use std::path::Path;

use crate::data::schema::{AttributeSchema, SchemaConfig};
use crate::data::table::{DatasetTable, Value};
use crate::error::{Error, Result};

/// What to do with a row that has an empty cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingValuePolicy {
    /// Drop the row and count it (default). Silent imputation would alter
    /// neighborhoods, so rows are either whole or absent.
    #[default]
    RejectRow,
    /// Fail the load on the first missing value.
    Abort,
}

/// A loaded table plus what was left behind.
#[derive(Debug)]
pub struct LoadOutcome {
    pub table: DatasetTable,
    /// 1-based data-row numbers (excluding the header) that were rejected.
    pub rejected_rows: Vec<usize>,
}

/// Load a CSV file against a declared schema.
///
/// Every schema column must appear in the header; extra CSV columns are
/// ignored. Observed min/max are computed over the retained rows of each
/// non-categorical column.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema_config: &SchemaConfig,
    policy: MissingValuePolicy,
) -> Result<LoadOutcome> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_reader(file, schema_config, policy)
}

/// Same as [`load_csv`] over any reader.
pub fn load_csv_reader(
    reader: impl io::Read,
    schema_config: &SchemaConfig,
    policy: MissingValuePolicy,
) -> Result<LoadOutcome> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(reader);

    let headers = csv_reader.headers()?.clone();
    let mut column_positions = Vec::with_capacity(schema_config.columns.len());
    for column in &schema_config.columns {
        let pos = headers
            .iter()
            .position(|h| h == column.name)
            .ok_or_else(|| Error::MissingColumn(column.name.clone()))?;
        column_positions.push(pos);
    }

    let schema: Vec<AttributeSchema> = schema_config
        .columns
        .iter()
        .map(|c| AttributeSchema::new(c.name.clone(), c.kind, c.role))
        .collect();

    let mut rows: Vec<Vec<Value>> = Vec::new();
    let mut rejected_rows = Vec::new();
    'records: for (i, record) in csv_reader.records().enumerate() {
        let record = record?;
        let row_number = i + 1;
        let mut row = Vec::with_capacity(schema.len());
        for (column, &pos) in schema_config.columns.iter().zip(&column_positions) {
            let cell = record.get(pos).unwrap_or("");
            if cell.is_empty() {
                match policy {
                    MissingValuePolicy::RejectRow => {
                        rejected_rows.push(row_number);
                        continue 'records;
                    }
                    MissingValuePolicy::Abort => {
                        return Err(Error::MissingValue {
                            row: row_number,
                            column: column.name.clone(),
                        })
                    }
                }
            }
            let value = if column.kind.is_numeric() {
                let parsed: f64 = cell.parse().map_err(|_| Error::BadCell {
                    row: row_number,
                    column: column.name.clone(),
                    cell: cell.to_string(),
                })?;
                if !parsed.is_finite() {
                    return Err(Error::BadCell {
                        row: row_number,
                        column: column.name.clone(),
                        cell: cell.to_string(),
                    });
                }
                Value::Num(parsed)
            } else {
                Value::Cat(cell.to_string())
            };
            row.push(value);
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    let table = DatasetTable::new(schema, rows)?;
    Ok(LoadOutcome {
        table,
        rejected_rows,
    })
}

/// Write a table as CSV: header row, then all rows in order. Numeric cells
/// use the shortest representation that parses back to the same value.
pub fn write_csv(writer: impl io::Write, table: &DatasetTable) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record(table.schema().iter().map(|c| c.name.as_str()))?;
    for row in table.rows() {
        csv_writer.write_record(row.iter().map(|v| v.render()))?;
    }
    csv_writer.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}
