//! Per-round CSV traces.
//!
//! The column set and order are fixed; floats are written with 17
//! significant digits so every value round-trips exactly, and an unknown
//! value (e.g. suboptimality without a solved optimum) is an empty field.

use std::io::{Read, Write};

use crate::cluster::RoundLog;
use crate::error::{Error, Result};

pub const TRACE_COLUMNS: [&str; 9] = [
    "run_id",
    "round",
    "objective",
    "suboptimality",
    "grad_norm",
    "cnz_hat",
    "uplink_bits_round",
    "broadcast_bits_round",
    "cumulative_bits",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub run_id: String,
    pub round: u64,
    pub objective: f64,
    pub suboptimality: Option<f64>,
    pub grad_norm: f64,
    pub cnz_hat: Option<f64>,
    pub uplink_bits_round: u64,
    pub broadcast_bits_round: u64,
    pub cumulative_bits: u64,
}

impl TraceRow {
    pub fn from_log(run_id: &str, log: &RoundLog) -> Self {
        Self {
            run_id: run_id.to_string(),
            round: log.round,
            objective: log.objective,
            suboptimality: log.suboptimality,
            grad_norm: log.grad_norm,
            cnz_hat: log.cnz_hat,
            uplink_bits_round: log.uplink_bits_round(),
            broadcast_bits_round: log.broadcast_bits,
            cumulative_bits: log.cumulative_bits,
        }
    }
}

pub fn rows_from_logs(run_id: &str, logs: &[RoundLog]) -> Vec<TraceRow> {
    logs.iter().map(|log| TraceRow::from_log(run_id, log)).collect()
}

/// 17 significant digits: one before the point, sixteen after.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::decode(format!("{other:?}")),
    }
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.run_id.clone(),
            r.round.to_string(),
            format_float(r.objective),
            format_opt(r.suboptimality),
            format_float(r.grad_norm),
            format_opt(r.cnz_hat),
            r.uplink_bits_round.to_string(),
            r.broadcast_bits_round.to_string(),
            r.cumulative_bits.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn field(record: &csv::StringRecord, i: usize) -> &str {
    record.get(i).unwrap_or("")
}

fn parse_u64(record: &csv::StringRecord, i: usize, line: u64) -> Result<u64> {
    field(record, i)
        .parse()
        .map_err(|_| Error::decode(format!("line {line}: `{}` is not an integer", TRACE_COLUMNS[i])))
}

fn parse_f64(record: &csv::StringRecord, i: usize, line: u64) -> Result<f64> {
    field(record, i)
        .parse::<f64>()
        .ok()
        .filter(|x| !x.is_nan())
        .ok_or_else(|| Error::decode(format!("line {line}: `{}` is not a number", TRACE_COLUMNS[i])))
}

fn parse_opt(record: &csv::StringRecord, i: usize, line: u64) -> Result<Option<f64>> {
    if field(record, i).is_empty() {
        Ok(None)
    } else {
        parse_f64(record, i, line).map(Some)
    }
}

/// Reads a trace, requiring the exact header and at least one row.
pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| Error::decode("empty trace"))?
        .map_err(csv_error)?;
    if header.iter().ne(TRACE_COLUMNS) {
        return Err(Error::decode(format!(
            "trace header must be `{}`",
            TRACE_COLUMNS.join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(TraceRow {
            run_id: field(&record, 0).to_string(),
            round: parse_u64(&record, 1, line)?,
            objective: parse_f64(&record, 2, line)?,
            suboptimality: parse_opt(&record, 3, line)?,
            grad_norm: parse_f64(&record, 4, line)?,
            cnz_hat: parse_opt(&record, 5, line)?,
            uplink_bits_round: parse_u64(&record, 6, line)?,
            broadcast_bits_round: parse_u64(&record, 7, line)?,
            cumulative_bits: parse_u64(&record, 8, line)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::decode("trace has no rows"));
    }
    Ok(rows)
}
