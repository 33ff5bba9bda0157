//! JSON and CSV serialization with a metadata block.
//!
//! JSON is canonical: `{"meta": {...}, ...payload}`. CSV files start with
//! `#`-prefixed metadata lines (`# key: value`, values JSON-encoded) followed
//! by a header row and the fixed columns of each data kind.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bvp::BifurcationCurve;
use crate::error::{Error, Result};
use crate::ivp::VProfile;
use crate::params::ProblemParams;
use crate::phase::PhaseOrbit;
use crate::solution::RadialSolution;

pub const TOOL: &str = "khessian";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const ORBIT_COLUMNS: [&str; 3] = ["t", "y", "z"];
pub const PROFILE_COLUMNS: [&str; 2] = ["r", "u"];
pub const BRANCH_COLUMNS: [&str; 4] = ["s", "lambda_rescaled", "lambda_physical", "A"];
pub const VPROFILE_COLUMNS: [&str; 4] = ["s", "v", "vprime", "flux"];

/// Provenance block embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: Value,
}

impl Meta {
    pub fn new(command: &str, params: Value) -> Self {
        Meta {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            params,
        }
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Numeric(format!("i/o: {e}"))
}

/// `{"meta": meta, ...payload}` where `payload` must serialize to an object.
pub fn to_json_document<T: Serialize>(meta: &Meta, payload: &T) -> Result<Value> {
    let mut doc = Map::new();
    doc.insert("meta".into(), serde_json::to_value(meta).map_err(io_err)?);
    match serde_json::to_value(payload).map_err(io_err)? {
        Value::Object(m) => doc.extend(m),
        other => {
            doc.insert("data".into(), other);
        }
    }
    Ok(Value::Object(doc))
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, meta: &Meta, payload: &T) -> Result<()> {
    let doc = to_json_document(meta, payload)?;
    serde_json::to_writer_pretty(&mut w, &doc).map_err(io_err)?;
    w.write_all(b"\n").map_err(io_err)
}

/// Metadata lines, a header and numeric rows.
pub fn write_csv<W: Write>(
    w: W,
    meta: &Meta,
    extra: &[(&str, Value)],
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    let rows = rows.into_iter().map(|row| row.into_iter().map(format_float).collect());
    write_csv_records(w, meta, extra, columns, rows)
}

/// As [`write_csv`] for preformatted fields.
pub fn write_csv_records<W: Write>(
    mut w: W,
    meta: &Meta,
    extra: &[(&str, Value)],
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let meta_value = serde_json::to_value(meta).map_err(io_err)?;
    if let Value::Object(m) = meta_value {
        for (key, value) in m {
            writeln!(w, "# {key}: {value}").map_err(io_err)?;
        }
    }
    for (key, value) in extra {
        writeln!(w, "# {key}: {value}").map_err(io_err)?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(columns).map_err(io_err)?;
    for row in rows {
        out.write_record(&row).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Shortest round-tripping decimal form.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn orbit_rows(orbit: &PhaseOrbit) -> Vec<Vec<f64>> {
    orbit.samples.iter().map(|s| vec![s.t, s.y, s.z]).collect()
}

pub fn profile_rows(sol: &RadialSolution) -> Vec<Vec<f64>> {
    sol.r.iter().zip(&sol.u).map(|(r, u)| vec![*r, *u]).collect()
}

pub fn branch_rows(curve: &BifurcationCurve) -> Vec<Vec<f64>> {
    curve
        .samples
        .iter()
        .map(|p| vec![p.s, p.lambda_rescaled, p.lambda_physical, p.a])
        .collect()
}

pub fn vprofile_rows(profile: &VProfile) -> Vec<Vec<f64>> {
    profile
        .samples()
        .iter()
        .map(|p| vec![p.s, p.v, p.vprime, p.flux])
        .collect()
}

/// A radial profile read back for verification.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileData {
    pub params: Option<ProblemParams>,
    pub lambda_physical: Option<f64>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Option<Vec<f64>>,
}

/// Reads either a JSON solution document or a `(r, u)` CSV file.
pub fn read_profile<R: Read>(mut reader: R) -> Result<ProfileData> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(io_err)?;
    if text.trim_start().starts_with('{') {
        read_profile_json(&text)
    } else {
        read_profile_csv(&text)
    }
}

fn read_profile_json(text: &str) -> Result<ProfileData> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::domain(format!("invalid JSON: {e}")))?;
    let body = doc.get("solution").unwrap_or(&doc);
    let sol: RadialSolution = serde_json::from_value(body.clone())
        .map_err(|e| Error::domain(format!("not a radial solution document: {e}")))?;
    Ok(ProfileData {
        params: Some(sol.params),
        lambda_physical: Some(sol.lambda_physical),
        r: sol.r,
        u: sol.u,
        du: Some(sol.du),
    })
}

fn read_profile_csv(text: &str) -> Result<ProfileData> {
    let mut meta = Map::new();
    for line in text.as_bytes().lines() {
        let line = line.map_err(io_err)?;
        let Some(rest) = line.strip_prefix("# ") else {
            break;
        };
        if let Some((key, value)) = rest.split_once(": ") {
            if let Ok(v) = serde_json::from_str::<Value>(value) {
                meta.insert(key.to_string(), v);
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(io_err)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ir), Some(iu)) = (col("r"), col("u")) else {
        return Err(Error::domain("CSV profile needs columns r,u"));
    };
    let mut r = Vec::new();
    let mut u = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::domain(format!("bad CSV row: {e}")))?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::domain(format!("bad number in CSV: {e}")))
        };
        r.push(parse(ir)?);
        u.push(parse(iu)?);
    }
    // a resolved `problem` line wins over the raw command parameters
    let params = ["problem", "params"]
        .iter()
        .filter_map(|key| meta.get(*key))
        .find_map(|p| serde_json::from_value::<ProblemParams>(p.clone()).ok());
    let lambda_physical = meta
        .get("lambda_physical")
        .and_then(Value::as_f64)
        .or_else(|| params.and_then(|p| p.lambda));
    Ok(ProfileData {
        params,
        lambda_physical,
        r,
        u,
        du: None,
    })
}
