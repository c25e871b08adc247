//! Report model: per-section checks, metrics and CSV tables, plus a timing
//! block kept apart so that reruns can be compared without it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

/// One thresholded measurement. `value ≤ threshold` passes unless the check
/// was built with [`Check::flag`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Acceptance criterion this check contributes to.
    pub criterion: Option<u8>,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: &str, criterion: Option<u8>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            criterion,
            value,
            threshold,
            pass: value <= threshold,
            detail: None,
        }
    }

    /// Counts failures among trials: value is the number of failed trials.
    pub fn all(name: &str, criterion: Option<u8>, failures: usize) -> Self {
        Self::at_most(name, criterion, failures as f64, 0.0)
    }

    /// Largest of `values`; an errored or `NaN` trial fails the check.
    pub fn max_of(name: &str, criterion: Option<u8>, values: &[Result<f64, String>], threshold: f64) -> Self {
        let mut worst = f64::NEG_INFINITY;
        let mut errors = Vec::new();
        for (i, v) in values.iter().enumerate() {
            match v {
                Ok(x) if x.is_nan() => errors.push(format!("trial {i}: NaN")),
                Ok(x) => worst = worst.max(*x),
                Err(e) => errors.push(format!("trial {i}: {e}")),
            }
        }
        if worst == f64::NEG_INFINITY {
            worst = 0.0;
        }
        let mut check = Self::at_most(name, criterion, worst, threshold);
        if !errors.is_empty() {
            check.pass = false;
            check.detail = Some(errors.join("; "));
        }
        check
    }

    pub fn flag(name: &str, criterion: Option<u8>, ok: bool, detail: Option<String>) -> Self {
        Self {
            name: name.into(),
            criterion,
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            pass: ok,
            detail,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// CSV table; cells are pre-formatted so that output is byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(self.file_name());
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Formats a cell. `f64` uses the shortest round-trip representation.
pub fn cell<T: std::fmt::Display>(v: T) -> String {
    v.to_string()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Section {
    pub name: String,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    /// File names of the CSV tables.
    pub tables: Vec<String>,
    #[serde(skip)]
    pub table_data: Vec<Table>,
    /// Wall-clock checks, moved into the report's timing block.
    #[serde(skip)]
    pub timed_checks: Vec<Check>,
    #[serde(skip)]
    pub seconds: f64,
}

impl Section {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.into(), v);
    }

    pub fn table(&mut self, table: Table) {
        self.tables.push(table.file_name());
        self.table_data.push(table);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().chain(&self.timed_checks).all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub total_s: f64,
    pub sections_s: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub subcommand: String,
    pub seed: u64,
    pub passed: bool,
    pub config: ExperimentConfig,
    pub sections: Vec<Section>,
    pub timing: Timing,
}

impl Report {
    pub fn all_checks(&self) -> impl Iterator<Item = &Check> {
        self.sections
            .iter()
            .flat_map(|s| s.checks.iter())
            .chain(self.timing.checks.iter())
    }

    /// Pass state per acceptance criterion, in criterion order.
    pub fn criteria(&self) -> BTreeMap<u8, bool> {
        let mut out = BTreeMap::new();
        for c in self.all_checks() {
            if let Some(k) = c.criterion {
                *out.entry(k).or_insert(true) &= c.pass;
            }
        }
        out
    }

    /// JSON form without the timing block.
    pub fn deterministic_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut v {
            map.remove("timing");
            // The pass flag folds in wall-clock checks.
            map.remove("passed");
        }
        v
    }

    /// Writes `summary.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let summary = dir.join("summary.json");
        fs::write(&summary, serde_json::to_string_pretty(self)? + "\n")?;
        written.push(summary);
        for s in &self.sections {
            for t in &s.table_data {
                written.push(t.write(dir)?);
            }
        }
        Ok(written)
    }
}
