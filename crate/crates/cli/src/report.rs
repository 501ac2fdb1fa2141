use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

/// Float with 17 significant digits, so values round-trip exactly.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Optional float; empty cell when absent.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// CSV body with a `#` header carrying the resolved config and a `#`
/// summary block after the rows.
pub struct Report {
    command: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    summary: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Report { command, columns: columns.to_vec(), rows: Vec::new(), summary: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn summary(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn render(&self, cfg: &RunConfig) -> Result<String, CliError> {
        let resolved = toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))?;
        let mut out = String::new();
        let _ = writeln!(out, "# dtn {} {}", self.command, env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# resolved config:");
        for line in resolved.lines() {
            let _ = writeln!(out, "#   {line}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        let _ = writeln!(out, "# summary:");
        for (k, v) in &self.summary {
            let _ = writeln!(out, "#   {k} = {v}");
        }
        Ok(out)
    }

    /// Writes `<dir>/<command>.csv` and returns its path.
    pub fn write(&self, cfg: &RunConfig, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{}.csv", self.command));
        std::fs::write(&path, self.render(cfg)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
