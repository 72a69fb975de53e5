//! Textual formats: the network DSL, JSON serialization, DOT export and
//! CSV data ingestion.

mod csv;
mod dot;
mod dsl;
mod json;

pub use csv::{read_csv, read_csv_path, write_csv};
pub use dot::to_dot;
pub use dsl::{parse_dsl, print_dsl};
pub use json::{from_json, to_json};
