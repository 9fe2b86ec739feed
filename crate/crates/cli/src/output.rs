//! CSV tables, gnuplot scripts and JSON run records.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Header comment shared by every table.
pub const UNITS_NOTE: &str = "frequencies in MHz (linear, omega/2pi); lengths in um; \
fidelities and errors dimensionless";

/// Column-oriented table written as CSV with `#` comment lines on top.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            comments: vec![UNITS_NOTE.to_string()],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation; `nan` for missing values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x}")
    }
}

/// Record of one invocation: resolved configuration, library version and the
/// command's summary.
#[derive(Debug, Serialize)]
pub struct RunRecord<'a, S: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    pub summary: &'a S,
    pub failed_points: &'a [String],
}

pub fn write_record<S: Serialize>(path: &Path, record: &RunRecord<'_, S>) -> Result<()> {
    let text = serde_json::to_string_pretty(record)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Directory for a run's files, created if missing.
pub fn prepare_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.to_path_buf())
}

/// Gnuplot script plotting columns of `csv` against column 1.
pub fn gnuplot_script(
    csv: &str,
    png: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(usize, &str)],
    extra: &[&str],
) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{png}'\n"));
    s.push_str(&format!("set xlabel '{xlabel}'\n"));
    s.push_str(&format!("set ylabel '{ylabel}'\n"));
    s.push_str("set grid\n");
    for e in extra {
        s.push_str(e);
        s.push('\n');
    }
    let plots: Vec<String> = series
        .iter()
        .map(|(col, title)| format!("'{csv}' using 1:{col} with linespoints title '{title}'"))
        .collect();
    s.push_str("plot ");
    s.push_str(&plots.join(", \\\n     "));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["a", "b"]);
        t.comment("extra note");
        t.push(vec![num(0.1), num(f64::NAN)]);
        t.write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# frequencies in MHz"));
        assert_eq!(lines[1], "# extra note");
        assert_eq!(lines[2], "a,b");
        assert_eq!(lines[3], "0.1,nan");
    }

    #[test]
    fn script_lists_series() {
        let s = gnuplot_script("x.csv", "x.png", "h", "F", &[(2, "one"), (3, "two")], &[]);
        assert!(s.contains("using 1:2"));
        assert!(s.contains("using 1:3"));
        assert!(s.contains("set output 'x.png'"));
    }
}
