//! Record CSV files (`time,accel,omega`) and atomic file output.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::VibrationRecord;

pub const RECORD_HEADER: [&str; 3] = ["time", "accel", "omega"];

/// Largest tolerated deviation of a sampling interval from the mean, as a
/// fraction of the mean interval.
pub const MAX_JITTER: f64 = 1e-9;

/// Fixed float formatting used for every emitted number: 17 significant
/// digits, scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Renders numeric columns as CSV with the given header.
pub fn columns_to_csv(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = String::with_capacity(rows * columns.len() * 24 + 64);
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..rows {
        for (i, c) in columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(c[r]));
        }
        out.push('\n');
    }
    out
}

pub fn record_to_csv(record: &VibrationRecord) -> String {
    let time: Vec<f64> = (0..record.len()).map(|n| record.time(n)).collect();
    columns_to_csv(&RECORD_HEADER, &[&time, record.x(), record.omega()])
}

pub fn write_record(path: &Path, record: &VibrationRecord) -> Result<()> {
    write_atomic(path, record_to_csv(record).as_bytes())
}

/// Reads named numeric columns from CSV text. Every requested column must be
/// present in the header.
pub fn parse_columns<R: Read>(reader: R, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Schema(e.to_string()))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| Error::Schema(format!("missing column `{n}`")))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema(format!("row {}: {e}", line + 2)))?;
        for (c, i) in cols.iter_mut().zip(&idx) {
            let field = rec.get(*i).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Schema(format!("row {}: `{field}` is not a number", line + 2)))?;
            c.push(v);
        }
    }
    Ok(cols)
}

/// Sample rate implied by a uniformly sampled time column.
pub fn infer_sample_rate(time: &[f64]) -> Result<f64> {
    if time.len() < 2 {
        return Err(Error::Schema("at least two samples are required".into()));
    }
    let span = time[time.len() - 1] - time[0];
    let dt = span / (time.len() - 1) as f64;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Schema("time column must be strictly increasing".into()));
    }
    for (i, w) in time.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > MAX_JITTER * dt {
            return Err(Error::Schema(format!("non-uniform sampling between rows {} and {}", i + 2, i + 3)));
        }
    }
    Ok(1.0 / dt)
}

pub fn parse_record<R: Read>(reader: R) -> Result<VibrationRecord> {
    let mut cols = parse_columns(reader, &RECORD_HEADER)?;
    let omega = cols.pop().expect("three columns");
    let x = cols.pop().expect("three columns");
    let fs = infer_sample_rate(&cols[0])?;
    VibrationRecord::new(x, fs, omega).map_err(|e| Error::Schema(e.to_string()))
}

pub fn read_record(path: &Path) -> Result<VibrationRecord> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_record(std::io::BufReader::new(file))
}
