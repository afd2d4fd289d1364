//! Writes a scenario outcome into a run directory: `summary.json`,
//! `diagnostics.csv`, one CSV per table and LLAB snapshots.

use std::fs;
use std::path::Path;

use super::report::Outcome;
use crate::error::Result;
use crate::snapshot;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes every artifact and returns the summary text. File names are
/// recorded in the report, in write order, before the summary is rendered.
pub fn write_outcome(dir: &Path, outcome: &mut Outcome) -> Result<String> {
    fs::create_dir_all(dir)?;
    let mut artifacts = Vec::new();

    if !outcome.diagnostics.is_empty() {
        let mut w = csv::Writer::from_path(dir.join("diagnostics.csv"))?;
        w.write_record([
            "run",
            "t",
            "mass",
            "classical_energy",
            "harmonic_energy",
            "pseudoconformal_energy",
            "sup_norm",
            "boundary_mass_fraction",
            "dt",
        ])?;
        for (label, rows) in &outcome.diagnostics {
            for r in rows {
                w.write_record([
                    label.clone(),
                    r.t.to_string(),
                    r.mass.to_string(),
                    opt(r.classical_energy),
                    opt(r.harmonic_energy),
                    opt(r.pseudoconformal_energy),
                    r.sup_norm.to_string(),
                    r.boundary_mass_fraction.to_string(),
                    r.dt.to_string(),
                ])?;
            }
        }
        w.flush()?;
        artifacts.push("diagnostics.csv".to_string());
    }

    for table in &outcome.tables {
        let name = format!("{}.csv", table.name);
        let mut w = csv::Writer::from_path(dir.join(&name))?;
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        artifacts.push(name);
    }

    if !outcome.snapshots.is_empty() {
        fs::create_dir_all(dir.join("snapshots"))?;
        for (name, field) in &outcome.snapshots {
            let rel = format!("snapshots/{name}.llab");
            snapshot::save(field, &dir.join(&rel))?;
            artifacts.push(rel);
        }
    }

    outcome.report.artifacts = artifacts;
    let mut text = serde_json::to_string_pretty(&outcome.report)?;
    text.push('\n');
    fs::write(dir.join("summary.json"), &text)?;
    Ok(text)
}
