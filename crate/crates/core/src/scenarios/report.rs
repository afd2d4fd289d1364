//! Scenario reports and the artifacts written next to them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::grid::{DiagnosticsRecord, Field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One thresholded quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            bound,
            passed: value <= bound,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            bound,
            passed: value >= bound,
        }
    }
}

/// A headline quantity evaluated at two resolutions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub quantity: String,
    /// What is refined (`dt`, `slices`, `n`, ...).
    pub parameter: String,
    pub coarse_resolution: f64,
    pub fine_resolution: f64,
    pub coarse: f64,
    pub fine: f64,
    /// `coarse / fine`.
    pub ratio: f64,
}

impl Refinement {
    pub fn new(quantity: &str, parameter: &str, resolutions: (f64, f64), values: (f64, f64)) -> Self {
        Self {
            quantity: quantity.into(),
            parameter: parameter.into(),
            coarse_resolution: resolutions.0,
            fine_resolution: resolutions.1,
            coarse: values.0,
            fine: values.1,
            ratio: values.0 / values.1,
        }
    }
}

/// The summary record of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub refinement: Refinement,
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// A plot-ready numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Report plus everything written beside it.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    /// Diagnostics streams labelled by run.
    pub diagnostics: Vec<(String, Vec<DiagnosticsRecord>)>,
    pub snapshots: Vec<(String, Field)>,
    pub tables: Vec<Table>,
}

/// Collects checks, values and artifacts while a scenario runs.
#[derive(Debug, Default)]
pub(crate) struct Builder {
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub diagnostics: Vec<(String, Vec<DiagnosticsRecord>)>,
    pub snapshots: Vec<(String, Field)>,
    pub tables: Vec<Table>,
}

impl Builder {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn value(&mut self, name: &str, v: f64) {
        self.values.insert(name.into(), v);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn slices(&mut self, label: &str, slices: &[Field]) {
        for (i, s) in slices.iter().enumerate() {
            self.snapshots.push((format!("{label}_{i:04}"), s.clone()));
        }
    }

    pub fn finish(self, scenario: &str, seed: u64, refinement: Refinement) -> Outcome {
        let passed = self.checks.iter().all(|c| c.passed);
        Outcome {
            report: Report {
                scenario: scenario.into(),
                seed,
                passed,
                checks: self.checks,
                refinement,
                values: self.values,
                notes: self.notes,
                artifacts: Vec::new(),
            },
            diagnostics: self.diagnostics,
            snapshots: self.snapshots,
            tables: self.tables,
        }
    }
}
