//! Result rows, traces and the files they are written to.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::TraceRow;

/// One row of `results.csv`.
///
/// Columns, in order: `experiment, seed, mode, pattern, grid, elements,
/// active, bits, basis_len, tx_antennas, objective`. Empty cells mean "not
/// applicable". The objective is the achievable rate (demo, case 1) or the
/// weighted sum rate (case 2), in bit/s/Hz. Wall-clock runtime is kept out of
/// this file so that it stays byte-identical between runs; it goes to
/// `timings.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub seed: u64,
    pub mode: String,
    /// Element pattern: `isotropic`, `tr38901` or `optimized`.
    pub pattern: String,
    /// Grid label such as `10x10`.
    pub grid: String,
    pub elements: usize,
    pub active: usize,
    pub bits: Option<u32>,
    pub basis_len: Option<usize>,
    pub tx_antennas: Option<usize>,
    pub objective: f64,
    #[serde(skip)]
    pub runtime_ms: f64,
}

impl ResultRecord {
    pub fn check(&self) -> Result<()> {
        if !(self.objective.is_finite() && self.objective >= 0.0) {
            return Err(Error::InvalidState(format!(
                "objective must be finite and >= 0, got {}",
                self.objective
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct TimingRow<'a> {
    experiment: &'a str,
    seed: u64,
    mode: &'a str,
    pattern: &'a str,
    grid: &'a str,
    active: usize,
    bits: Option<u32>,
    tx_antennas: Option<usize>,
    runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTrace {
    /// File stem under `trace/`.
    pub name: String,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
    pub traces: Vec<NamedTrace>,
    pub report: serde_json::Value,
}

pub fn records_to_csv(records: &[ResultRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        r.check()?;
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<ResultRecord>, _>>()?)
}

pub fn trace_to_csv(rows: &[TraceRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<TraceRow>, _>>()?)
}

/// Writes `results.csv`, `timings.csv`, `trace/*.csv` and `report.json`.
pub fn write_output(dir: &Path, out: &ExperimentOutput) -> Result<()> {
    fs::create_dir_all(dir.join("trace"))?;
    fs::write(dir.join("results.csv"), records_to_csv(&out.records)?)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &out.records {
        w.serialize(TimingRow {
            experiment: &r.experiment,
            seed: r.seed,
            mode: &r.mode,
            pattern: &r.pattern,
            grid: &r.grid,
            active: r.active,
            bits: r.bits,
            tx_antennas: r.tx_antennas,
            runtime_ms: r.runtime_ms,
        })?;
    }
    fs::write(
        dir.join("timings.csv"),
        w.into_inner().map_err(|e| Error::Io(e.into_error()))?,
    )?;

    for t in &out.traces {
        fs::write(
            dir.join("trace").join(format!("{}.csv", t.name)),
            trace_to_csv(&t.rows)?,
        )?;
    }
    let mut report = serde_json::to_string_pretty(&out.report)?;
    report.push('\n');
    fs::write(dir.join("report.json"), report)?;
    Ok(())
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
