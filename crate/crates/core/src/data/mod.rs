//! Dataset ingestion, typing, and validation.
//!
//! A dataset is a CSV file plus a declared schema assigning each column a
//! kind (categorical, continuous, ordinal, interval) and a role (protected,
//! non-protected, outcome). Loading validates every cell, computes the
//! observed ranges used for distance normalization, and produces an
//! immutable [`DatasetTable`].

mod csv_io;
mod schema;
mod table;

pub use csv_io::{load_csv, load_csv_reader, write_csv, LoadOutcome, MissingValuePolicy};
pub use schema::{
    AttributeKind, AttributeRole, AttributeSchema, ColumnConfig, ProtectedEncoding, SchemaConfig,
};
pub use table::{
    encode_protected, summarize, DatasetTable, GroupSummary, IndividualProfile, Value,
};
