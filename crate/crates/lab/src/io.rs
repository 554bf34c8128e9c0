//! File formats: curve CSV, trajectory CSV with a JSON sidecar, JSON-lines
//! records. Every write goes to a temporary file in the target directory
//! and is renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use contact_core::Trajectory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::estimators::CurvePoint;

pub const CURVE_HEADER: &str = "t,value,stderr";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} line {line}: {msg}")]
    Schema { path: String, line: usize, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.display().to_string(), source }
}

/// Writes `bytes` to `path` atomically (temporary file, then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| IoError::Io { path: path.display().to_string(), source: e.error })?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    Ok(sha256_hex(&std::fs::read(path).map_err(io_err(path))?))
}

/// `t,value,stderr` rows, LF line ends, shortest round-trip decimals.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in points {
        writeln!(out, "{},{},{}", p.t, p.value, p.std_error).expect("string write");
    }
    out
}

pub fn parse_curve_csv(text: &str, path: &str) -> Result<Vec<CurvePoint>, IoError> {
    let schema = |line: usize, msg: String| IoError::Schema { path: path.to_owned(), line, msg };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == CURVE_HEADER => {}
        Some((_, h)) => return Err(schema(1, format!("expected header `{CURVE_HEADER}`, found `{h}`"))),
        None => return Err(schema(1, "empty file".into())),
    }
    let mut points = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(schema(i + 1, format!("expected 3 fields, found {}", fields.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| schema(i + 1, format!("`{s}`: {e}")));
        points.push(CurvePoint { t: num(fields[0])?, value: num(fields[1])?, std_error: num(fields[2])? });
    }
    Ok(points)
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurvePoint>, IoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_curve_csv(&text, &path.display().to_string())
}

/// `time,vertex,state` rows: the initial state of every recorded vertex at
/// the window start, then one row per flip.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("time,vertex,state\n");
    for (i, &v) in traj.delta.iter().enumerate() {
        writeln!(out, "{},{},{}", traj.window.0, v, u8::from(traj.initial[i])).expect("string write");
    }
    for e in &traj.events {
        writeln!(out, "{},{},{}", e.time, traj.delta[e.site], u8::from(e.infected)).expect("string write");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub seed: u64,
    pub config_hash: String,
    pub window: (f64, f64),
    pub vertices: Vec<usize>,
    pub events: usize,
    /// Whether the process was still alive at the window end (the record is
    /// censored there).
    pub censored: bool,
}

/// One JSON object per line.
pub fn jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("serializable"));
        out.push('\n');
    }
    out
}
