// SPDX-License-Identifier: MIT OR Apache-2.0

//! Report persistence.
//!
//! The CSV has one row per cell with the columns of [`CSV_HEADER`]; absent
//! values are empty fields and reals use Rust's shortest round-trip
//! formatting, so re-import is lossless. The JSON form is the serialized
//! [`ExperimentReport`] and carries `schema_version`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::config::SignalKind;
use super::experiment::{CellRecord, ExperimentReport, Frequency, PhaseSweep, REPORT_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::procedures::ThresholdSource;

pub const CSV_HEADER: [&str; 24] = [
    "p",
    "n",
    "s",
    "t0",
    "procedure",
    "signal_kind",
    "signal_value",
    "rho2",
    "threshold_source",
    "constant",
    "threshold",
    "type1",
    "type1_se",
    "type1_count",
    "null_reps",
    "power",
    "power_se",
    "power_count",
    "alt_reps",
    "type2",
    "type2_se",
    "error",
    "wall_ms",
    "version",
];

pub const PHASE_HEADER: [&str; 10] = [
    "p", "n", "t0", "s", "signal_kind", "signal_value", "rho2", "power", "power_se", "type1",
];

/// Export format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn source_str(s: ThresholdSource) -> &'static str {
    match s {
        ThresholdSource::Constant => "constant",
        ThresholdSource::Calibrated => "calibrated",
        ThresholdSource::Absolute => "absolute",
        ThresholdSource::Asymptotic => "asymptotic",
    }
}

fn parse_source(text: &str) -> Option<ThresholdSource> {
    Some(match text {
        "constant" => ThresholdSource::Constant,
        "calibrated" => ThresholdSource::Calibrated,
        "absolute" => ThresholdSource::Absolute,
        "asymptotic" => ThresholdSource::Asymptotic,
        _ => return None,
    })
}

fn csv_row(c: &CellRecord, version: &str) -> Vec<String> {
    vec![
        c.p.to_string(),
        c.n.to_string(),
        c.s.to_string(),
        opt(c.t0),
        c.procedure.clone(),
        opt(c.signal_kind.map(SignalKind::as_str)),
        opt(c.signal_value),
        opt(c.rho2),
        opt(c.threshold_source.map(source_str)),
        opt(c.constant),
        opt(c.threshold),
        opt(c.type1.map(|f| f.rate)),
        opt(c.type1.map(|f| f.se)),
        opt(c.type1.map(|f| f.count)),
        opt(c.type1.map(|f| f.reps)),
        opt(c.power.map(|f| f.rate)),
        opt(c.power.map(|f| f.se)),
        opt(c.power.map(|f| f.count)),
        opt(c.power.map(|f| f.reps)),
        opt(c.type2.map(|f| f.rate)),
        opt(c.type2.map(|f| f.se)),
        opt(c.error.clone()),
        c.wall_ms.to_string(),
        version.to_string(),
    ]
}

/// Writes the per-cell CSV to any writer.
pub fn write_report_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in &report.cells {
        w.write_record(csv_row(c, &report.metadata.version))?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))
}

fn field<T: FromStr>(rec: &csv::StringRecord, idx: usize) -> Result<Option<T>> {
    let text = rec.get(idx).unwrap_or("");
    if text.is_empty() {
        return Ok(None);
    }
    text.parse()
        .map(Some)
        .map_err(|_| Error::config(format!("column {}: cannot parse {text:?}", CSV_HEADER[idx])))
}

fn required<T: FromStr>(rec: &csv::StringRecord, idx: usize) -> Result<T> {
    field(rec, idx)?.ok_or_else(|| Error::config(format!("column {} is empty", CSV_HEADER[idx])))
}

fn frequency(rate: Option<f64>, se: Option<f64>, count: Option<usize>, reps: Option<usize>) -> Option<Frequency> {
    match (rate, se, count, reps) {
        (Some(rate), Some(se), Some(count), Some(reps)) => Some(Frequency { count, reps, rate, se }),
        _ => None,
    }
}

/// Reads cell records written by [`write_report_csv`].
pub fn read_report_csv<R: std::io::Read>(input: R) -> Result<Vec<CellRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::config("unexpected CSV header"));
    }
    let mut cells = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let power = frequency(field(&rec, 15)?, field(&rec, 16)?, field(&rec, 17)?, field(&rec, 18)?);
        let type2 = match (power, field::<f64>(&rec, 19)?, field::<f64>(&rec, 20)?) {
            (Some(pw), Some(rate), Some(se)) => Some(Frequency {
                count: pw.reps - pw.count,
                reps: pw.reps,
                rate,
                se,
            }),
            _ => None,
        };
        cells.push(CellRecord {
            p: required(&rec, 0)?,
            n: required(&rec, 1)?,
            s: required(&rec, 2)?,
            t0: field(&rec, 3)?,
            procedure: rec.get(4).unwrap_or("").to_string(),
            signal_kind: match rec.get(5).unwrap_or("") {
                "" => None,
                k => Some(SignalKind::parse(k).ok_or_else(|| Error::config(format!("unknown signal kind {k:?}")))?),
            },
            signal_value: field(&rec, 6)?,
            rho2: field(&rec, 7)?,
            threshold_source: match rec.get(8).unwrap_or("") {
                "" => None,
                k => Some(parse_source(k).ok_or_else(|| Error::config(format!("unknown threshold source {k:?}")))?),
            },
            constant: field(&rec, 9)?,
            threshold: field(&rec, 10)?,
            type1: frequency(field(&rec, 11)?, field(&rec, 12)?, field(&rec, 13)?, field(&rec, 14)?),
            power,
            type2,
            error: field(&rec, 21)?,
            wall_ms: required(&rec, 22)?,
        });
    }
    Ok(cells)
}

pub fn write_report_json<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

pub fn read_report_json(text: &str) -> Result<ExperimentReport> {
    let report: ExperimentReport = serde_json::from_str(text)?;
    if report.schema_version != REPORT_SCHEMA_VERSION {
        return Err(Error::config(format!(
            "unsupported report schema version {}",
            report.schema_version
        )));
    }
    Ok(report)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes the report to `path` in `format`.
pub fn export(report: &ExperimentReport, format: Format, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    match format {
        Format::Csv => write_report_csv(report, &mut out)?,
        Format::Json => write_report_json(report, &mut out)?,
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Long-format phase table: one row per `(p, n, t0, s, signal)`.
pub fn write_phase_csv<W: Write>(sweep: &PhaseSweep, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PHASE_HEADER)?;
    for c in sweep.report.cells.iter().filter(|c| c.power.is_some()) {
        w.write_record([
            c.p.to_string(),
            c.n.to_string(),
            opt(c.t0),
            c.s.to_string(),
            opt(c.signal_kind.map(SignalKind::as_str)),
            opt(c.signal_value),
            opt(c.rho2),
            opt(c.power.map(|f| f.rate)),
            opt(c.power.map(|f| f.se)),
            opt(c.type1.map(|f| f.rate)),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))
}

pub fn export_phase(sweep: &PhaseSweep, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    write_phase_csv(sweep, &mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}
