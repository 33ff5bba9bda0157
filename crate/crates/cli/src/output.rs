use std::io::Write;
use std::path::Path;

use khessian::io::{self, Meta};
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub fn meta<T: Serialize>(command: &str, args: &T) -> Meta {
    Meta::new(command, serde_json::to_value(args).unwrap_or(Value::Null))
}

pub fn json<T: Serialize>(meta: &Meta, payload: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    io::write_json(&mut buf, meta, payload)?;
    Ok(buf)
}

pub fn csv(meta: &Meta, extra: &[(&str, Value)], columns: &[&str], rows: Vec<Vec<f64>>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    io::write_csv(&mut buf, meta, extra, columns, rows)?;
    Ok(buf)
}

pub fn csv_records(
    meta: &Meta,
    extra: &[(&str, Value)],
    columns: &[&str],
    rows: Vec<Vec<String>>,
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    io::write_csv_records(&mut buf, meta, extra, columns, rows)?;
    Ok(buf)
}

/// Writes to `path`, or to standard output when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Output(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Output(e.to_string()))
        }
    }
}
