//! JSON table fixtures for [`TableBackend`].
//!
//! ```json
//! {
//!   "token_scores": {"The waiter came over": {"tokens": [...], "log_probs": [...], "attentions": [...]}},
//!   "fill_mask": {"The waiter came over": {"1": [{"token": "waiter", "prob": 0.4}]}},
//!   "embed": {"The waiter came over": [0.1, 0.2]}
//! }
//! ```

use std::path::Path;

use genbias_core::scoring::TableFixture;
use genbias_core::TableBackend;

use crate::error::{Error, Result};
use crate::io;

pub fn load_table(path: &Path) -> Result<TableBackend> {
    let fixture: TableFixture = io::read_json(path)?;
    TableBackend::from_fixture(fixture).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

/// Write a table as a pretty-printed fixture. Keys are sorted, so equal
/// tables always serialize to identical bytes.
pub fn save_table(path: &Path, table: &TableBackend) -> Result<()> {
    io::write_json(path, &table.to_fixture())
}

pub fn table_to_string(table: &TableBackend) -> String {
    serde_json::to_string_pretty(&table.to_fixture()).expect("fixtures always serialize")
}
