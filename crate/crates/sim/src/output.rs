//! Result tables and convergence traces on disk.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::error::SimError;

pub const RESULT_COLUMNS: [&str; 7] =
    ["method", "snr_db", "analytic_nmse", "empirical_nmse", "iterations", "wall_time", "seed"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub snr_db: f64,
    pub analytic_nmse: f64,
    pub empirical_nmse: f64,
    pub iterations: usize,
    /// Seconds spent designing and simulating the cell.
    pub wall_time: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Picks the format from the file extension, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io { path: path.to_path_buf(), source }
}

fn fmt_err(path: &Path, e: impl std::fmt::Display) -> SimError {
    SimError::Format { path: path.to_path_buf(), msg: e.to_string() }
}

pub fn write_results<W: Write>(rows: &[ResultRow], format: Format, out: W) -> Result<(), String> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(RESULT_COLUMNS).map_err(|e| e.to_string())?;
            for r in rows {
                w.serialize(r).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows).map_err(|e| e.to_string())?;
            writeln!(out).map_err(|e| e.to_string())
        }
    }
}

pub fn emit_results(rows: &[ResultRow], format: Format, path: &Path) -> Result<(), SimError> {
    let f = File::create(path).map_err(io_err(path))?;
    write_results(rows, format, BufWriter::new(f)).map_err(|e| fmt_err(path, e))
}

pub fn read_results(path: &Path, format: Format) -> Result<Vec<ResultRow>, SimError> {
    let f = File::open(path).map_err(io_err(path))?;
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(f);
            let header = r.headers().map_err(|e| fmt_err(path, e))?;
            if header.iter().ne(RESULT_COLUMNS) {
                return Err(fmt_err(path, format!("unexpected header {header:?}")));
            }
            r.deserialize().collect::<Result<_, _>>().map_err(|e| fmt_err(path, e))
        }
        Format::Json => serde_json::from_reader(std::io::BufReader::new(f)).map_err(|e| fmt_err(path, e)),
    }
}

/// Writes `(iteration, mse)` pairs; iteration 0 is the starting point.
pub fn emit_convergence(trace: &[f64], path: &Path) -> Result<(), SimError> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(f));
    w.write_record(["iteration", "mse"]).map_err(|e| fmt_err(path, e))?;
    for (i, e) in trace.iter().enumerate() {
        w.write_record([i.to_string(), e.to_string()]).map_err(|e| fmt_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_convergence(path: &Path) -> Result<Vec<(usize, f64)>, SimError> {
    let f = File::open(path).map_err(io_err(path))?;
    csv::Reader::from_reader(f).deserialize().collect::<Result<_, _>>().map_err(|e| fmt_err(path, e))
}
