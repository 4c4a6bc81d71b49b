//! Minimal CSV emission: `#` header, one header row, numeric rows.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use larva_core::Error;

use crate::manifest::RunManifest;
use crate::CliResult;

/// Column-major numeric table.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<String>>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push<T: Display>(&mut self, name: &str, values: impl IntoIterator<Item = T>) -> &mut Self {
        self.names.push(name.to_string());
        self.columns.push(values.into_iter().map(|v| v.to_string()).collect());
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn render(&self, manifest: &RunManifest) -> String {
        debug_assert!(self.columns.iter().all(|c| c.len() == self.rows()));
        let mut out = manifest.header();
        out.push_str(&self.names.join(","));
        out.push('\n');
        for r in 0..self.rows() {
            let row: Vec<&str> = self.columns.iter().map(|c| c[r].as_str()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes to `path`, or to stdout when `path` is `None`.
    pub fn write(&self, manifest: &RunManifest, path: Option<&Path>) -> CliResult<()> {
        let text = self.render(manifest);
        match path {
            Some(p) => write_file(p, text.as_bytes()),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).map_err(|e| io_error("<stdout>", e))?;
                Ok(())
            }
        }
    }
}

pub(crate) fn io_error(path: &str, source: std::io::Error) -> crate::CliError {
    Error::Io {
        path: path.to_string(),
        source,
    }
    .into()
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(&dir.display().to_string(), e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_error(&path.display().to_string(), e))
}
