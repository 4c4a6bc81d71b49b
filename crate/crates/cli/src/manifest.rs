//! Provenance header written at the top of every CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario: PathBuf,
    pub scenario_name: String,
    pub subcommand: &'static str,
    pub controller: Option<String>,
    pub outputs: Vec<PathBuf>,
    pub precision: &'static str,
    /// Scenario description lines, echoed verbatim.
    pub notes: Vec<String>,
    /// Extra `key: value` lines (solved constants, summary figures).
    pub fields: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(scenario: &Path, scenario_name: &str, subcommand: &'static str) -> Self {
        RunManifest {
            scenario: scenario.to_path_buf(),
            scenario_name: scenario_name.to_string(),
            subcommand,
            controller: None,
            outputs: Vec::new(),
            precision: "f64",
            notes: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    /// Header lines, each starting with `# `.
    pub fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tool: larvactl {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# subcommand: {}", self.subcommand);
        let _ = writeln!(s, "# scenario: {} ({})", self.scenario.display(), self.scenario_name);
        if let Some(c) = &self.controller {
            let _ = writeln!(s, "# controller: {c}");
        }
        let _ = writeln!(s, "# precision: {}", self.precision);
        let _ = writeln!(s, "# deterministic: true");
        for o in &self.outputs {
            let _ = writeln!(s, "# output: {}", o.display());
        }
        for n in &self.notes {
            let _ = writeln!(s, "# note: {n}");
        }
        for (k, v) in &self.fields {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }
}
