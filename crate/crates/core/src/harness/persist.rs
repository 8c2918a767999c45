//! On-disk layout of a sweep:
//!
//! ```text
//! out/
//!   index.json           schema version, spec, run records, aggregates
//!   runs/run_000000.csv  time series of run 0
//!   ...
//! ```
//!
//! Time series are RFC 4180 CSV with the [`ObservableSample::COLUMNS`]
//! header. Floats are written in shortest round-trip form, so loading a
//! persisted sweep returns exactly what was written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::ObservableSample;

use super::experiment::{ExperimentSpec, PointAggregate, RunRecord, SweepResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const INDEX_FILE: &str = "index.json";
pub const RUNS_DIR: &str = "runs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IndexEntry {
    series: String,
    record: RunRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Index {
    schema_version: u32,
    spec: ExperimentSpec,
    runs: Vec<IndexEntry>,
    aggregates: Vec<PointAggregate>,
}

/// A JSON document with a schema version and a kind tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema_version: u32,
    pub kind: String,
    pub report: T,
}

pub fn series_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(RUNS_DIR).join(format!("run_{index:06}.csv"))
}

pub fn persist(dir: &Path, result: &SweepResult) -> Result<()> {
    fs::create_dir_all(dir.join(RUNS_DIR))?;
    let mut runs = Vec::with_capacity(result.records.len());
    for r in &result.records {
        let path = series_path(dir, r.plan.index);
        write_series(&path, &r.samples)?;
        runs.push(IndexEntry {
            series: path
                .strip_prefix(dir)
                .unwrap_or(&path)
                .to_string_lossy()
                .into_owned(),
            record: RunRecord {
                samples: Vec::new(),
                ..r.clone()
            },
        });
    }
    let index = Index {
        schema_version: SCHEMA_VERSION,
        spec: result.spec.clone(),
        runs,
        aggregates: result.aggregates.clone(),
    };
    write_json(&dir.join(INDEX_FILE), &index)
}

pub fn load(dir: &Path) -> Result<SweepResult> {
    let path = dir.join(INDEX_FILE);
    let index: Index = read_versioned(&path)?;
    let mut records = Vec::with_capacity(index.runs.len());
    for entry in index.runs {
        let mut record = entry.record;
        record.samples = read_series(&dir.join(&entry.series))?;
        records.push(record);
    }
    Ok(SweepResult {
        spec: index.spec,
        records,
        aggregates: index.aggregates,
    })
}

pub fn write_series(path: &Path, samples: &[ObservableSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ObservableSample::COLUMNS)?;
    for s in samples {
        w.write_record(s.values().iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series(path: &Path) -> Result<Vec<ObservableSample>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(ObservableSample::COLUMNS) {
        return Err(Error::CsvHeader {
            path: path.to_owned(),
            header: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let mut values = [0.0; ObservableSample::COLUMNS.len()];
        for (slot, field) in values.iter_mut().zip(row.iter()) {
            *slot = field.trim().parse().map_err(|_| Error::CsvHeader {
                path: path.to_owned(),
                header: format!("unparsable value `{field}`"),
            })?;
        }
        out.push(ObservableSample::from_values(values));
    }
    Ok(out)
}

pub fn write_report<T: Serialize>(path: &Path, kind: &str, report: &T) -> Result<()> {
    write_json(
        path,
        &Report {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_owned(),
            report,
        },
    )
}

pub fn read_report<T: DeserializeOwned>(path: &Path) -> Result<Report<T>> {
    read_versioned(path)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Checks `schema_version` before deserializing the rest.
fn read_versioned<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            path: path.to_owned(),
            found,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(serde_json::from_value(value)?)
}
