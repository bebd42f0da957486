use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// Version of the column layout; bumped whenever a column changes meaning.
pub const CSV_SCHEMA: u32 = 1;

/// Rectangular result set with named columns. Units are part of the names
/// (`_w` watts, `_bpj` bits per joule, `_db` decibels, no suffix for
/// dimensionless values).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a numeric column.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let i = self.column(name).unwrap_or_else(|| panic!("no column `{name}`"));
        self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect()
    }

    pub fn write_csv(&self, path: &Path, header: &str) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# {header}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn int(x: impl Into<u64>) -> String {
    x.into().to_string()
}

pub fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

/// Paths of the files written for one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub trace: Option<PathBuf>,
}

impl OutputPaths {
    pub fn new(dir: &Path, name: &str, with_trace: bool) -> Self {
        OutputPaths {
            csv: dir.join(format!("{name}.csv")),
            summary: dir.join(format!("{name}.summary.json")),
            trace: with_trace.then(|| dir.join(format!("{name}.trace.csv"))),
        }
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Default)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Population statistics of the finite values; NaN fields when none.
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Stats {
                count: 0,
                mean: f64::NAN,
                variance: f64::NAN,
                median: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let variance = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let mid = v.len() / 2;
        let median = if v.len() % 2 == 0 { 0.5 * (v[mid - 1] + v[mid]) } else { v[mid] };
        Stats {
            count: v.len(),
            mean,
            variance,
            median,
            min: v[0],
            max: v[v.len() - 1],
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "count": self.count,
            "mean": finite_or_null(self.mean),
            "variance": finite_or_null(self.variance),
            "median": finite_or_null(self.median),
            "min": finite_or_null(self.min),
            "max": finite_or_null(self.max),
        })
    }
}

/// JSON has no NaN; absent values become `null`.
pub fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::Value::Null
    }
}
