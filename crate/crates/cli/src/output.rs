//! CSV tables and JSON manifests.
//!
//! Floats go through [`N`], which prints the shortest decimal string that
//! parses back to the same `f64` (exponent form below 1e-4 and from 1e16).

use std::fmt::{Display, Write as _};
use std::path::Path;

use serde_json::{json, Value};

use crate::config::{RunConfig, FORMAT_VERSION};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// CSV float cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N(pub f64);

impl Display for N {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Appended to the subcommand name, e.g. `_snapshots`.
    pub suffix: &'static str,
    text: String,
}

impl Table {
    pub fn new(suffix: &'static str, columns: &[&str]) -> Self {
        let mut text = columns.join(",");
        text.push('\n');
        Self { suffix, text }
    }

    pub fn row(&mut self, cells: &[&dyn Display]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{c}").unwrap();
        }
        self.text.push('\n');
    }
}

#[derive(Debug)]
pub struct CommandOutput {
    pub tables: Vec<Table>,
    pub diagnostics: Value,
    /// Set when the command ran but a check did not hold.
    pub failure: Option<String>,
}

impl CommandOutput {
    pub fn new(tables: Vec<Table>, diagnostics: Value) -> Self {
        Self {
            tables,
            diagnostics,
            failure: None,
        }
    }
}

pub fn write_outputs(
    dir: &Path,
    name: &str,
    cfg: &RunConfig,
    out: &CommandOutput,
    wall_time: f64,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for t in &out.tables {
        let file = format!("{name}{}.csv", t.suffix);
        let path = dir.join(&file);
        std::fs::write(&path, &t.text)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        files.push(file);
    }
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "format_version": FORMAT_VERSION,
        "tool": "qfeedback",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "subcommand": name,
        "config": cfg,
        "outputs": files,
        "wall_time_s": wall_time,
        "diagnostics": out.diagnostics,
    });
    let path = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
