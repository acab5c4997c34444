// SPDX-License-Identifier: MIT OR Apache-2.0

//! Observation matrix files.
//!
//! CSV: `p` rows by `n` columns, no header, `.` decimal separator.
//! Binary: the 8-byte magic `CPMX0001`, little-endian `u64` `p` and `n`,
//! then `p·n` little-endian `f64` values in column-major (time-major) order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::ObservationMatrix;

pub const BINARY_MAGIC: &[u8; 8] = b"CPMX0001";

/// Reads either format, detected by the magic bytes.
pub fn read_matrix(path: &Path) -> Result<ObservationMatrix> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(BINARY_MAGIC) {
        decode_binary(&bytes).map_err(|m| Error::format(path, m))
    } else {
        decode_csv(&bytes, path)
    }
}

fn decode_binary(bytes: &[u8]) -> std::result::Result<ObservationMatrix, String> {
    let header = 8 + 16;
    if bytes.len() < header {
        return Err("truncated header".into());
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (p, n) = (word(8), word(16));
    let count = p
        .checked_mul(n)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or("dimensions overflow")?;
    let body = &bytes[header..];
    if body.len() != count * 8 {
        return Err(format!("expected {} value bytes for {p}x{n}, found {}", count * 8, body.len()));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ObservationMatrix::from_column_major(p as usize, n as usize, values).map_err(|e| e.to_string())
}

fn decode_csv(bytes: &[u8], path: &Path) -> Result<ObservationMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::format(path, format!("row {}: cannot parse {field:?} as a number", i + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    ObservationMatrix::from_rows(&rows).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_matrix_csv(x: &ObservationMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    for j in 0..x.p() {
        writer.write_record(x.row(j).iter().map(|v| v.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn write_matrix_binary(x: &ObservationMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&(x.p() as u64).to_le_bytes())?;
        out.write_all(&(x.n() as u64).to_le_bytes())?;
        for v in x.as_slice() {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Writes CSV unless the extension is `.bin`.
pub fn write_matrix(x: &ObservationMatrix, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e == "bin") {
        write_matrix_binary(x, path)
    } else {
        write_matrix_csv(x, path)
    }
}
