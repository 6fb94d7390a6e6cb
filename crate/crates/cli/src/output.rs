//! CSV tables with a `# key = value` header.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Header keys written by the harness itself rather than taken from the run
/// configuration.
pub const META_KEYS: [&str; 4] = ["purify-version", "command", "table", "time-unit"];

/// One logical output table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self { name, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// The full file contents: header, column line, rows.
    pub fn render(&self, command: &str, config: &[(&'static str, String)]) -> String {
        let mut out = String::new();
        let meta = [
            ("purify-version", purify_core::VERSION),
            ("command", command),
            ("table", self.name),
            ("time-unit", "1/gamma0"),
        ];
        for (k, v) in meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        for (k, v) in config {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest text that parses back to the same value.
pub fn num(v: f64) -> String {
    v.to_string()
}

/// Path of a secondary table: `run.csv` becomes `run.<name>.csv`.
pub fn sibling_path(primary: &Path, name: &str) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let file = match primary.extension() {
        Some(ext) => format!("{stem}.{name}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{name}"),
    };
    primary.with_file_name(file)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_names() {
        assert_eq!(sibling_path(Path::new("out/run.csv"), "fig4"), Path::new("out/run.fig4.csv"));
        assert_eq!(sibling_path(Path::new("run"), "passage"), Path::new("run.passage"));
    }

    #[test]
    fn render_layout() {
        let mut t = Table::new("rows", &["a", "b"]);
        t.push(vec![num(0.5), num(1e-8)]);
        let text = t.render("mtfp", &[("epsilon", "0.001".into())]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[2], "# table = rows");
        assert_eq!(lines[3], "# time-unit = 1/gamma0");
        assert_eq!(lines[4], "# epsilon = 0.001");
        assert_eq!(lines[5], "a,b");
        assert_eq!(lines[6], "0.5,0.00000001");
        assert!(crate::config::parse_header(&text).is_ok());
    }
}
