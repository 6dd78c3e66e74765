//! Measured (or synthetic) gain datasets.
//!
//! CSV layout, header required verbatim:
//!
//! ```text
//! delta_gamma,theta_deg,g_p,g_c[,weight]
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sweep::{format_float, GainMap, SecondAxis};
use crate::{Error, Result};

const HEADER: [&str; 4] = ["delta_gamma", "theta_deg", "g_p", "g_c"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainRecord {
    /// Two-photon detuning [gamma].
    pub delta: f64,
    /// Pump-probe angle [deg].
    pub theta_deg: f64,
    pub g_p: f64,
    pub g_c: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainDataset {
    pub records: Vec<GainRecord>,
    /// Whether the source carried a weight column.
    pub weighted: bool,
}

impl GainDataset {
    /// Validates records: finite values, positive gains and weights, unique
    /// (delta, theta) keys.
    pub fn new(records: Vec<GainRecord>, weighted: bool) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("dataset", "no records"));
        }
        let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
        for (k, r) in records.iter().enumerate() {
            check_record(r).map_err(|m| Error::invalid(format!("record {k}"), m))?;
            if let Some(first) = seen.insert(key(r), k) {
                return Err(Error::invalid(
                    "dataset",
                    format!("records {first} and {k} share (delta, theta)"),
                ));
            }
        }
        Ok(GainDataset { records, weighted })
    }

    /// Every successful cell of an angle-resolved gain map, unit weights.
    pub fn from_gain_map(map: &GainMap) -> Result<Self> {
        let SecondAxis::ThetaDeg(thetas) = &map.second_axis else {
            return Err(Error::invalid("second_axis", "datasets need an angle axis"));
        };
        let mut records = Vec::new();
        for (i, theta) in thetas.iter().enumerate() {
            for (j, delta) in map.delta_axis.iter().enumerate() {
                if let (Some(g_p), Some(g_c)) = (map.gp_grid[i][j], map.gc_grid[i][j]) {
                    records.push(GainRecord {
                        delta: *delta,
                        theta_deg: *theta,
                        g_p,
                        g_c,
                        weight: 1.0,
                    });
                }
            }
        }
        Self::new(records, false)
    }

    /// Records with `lo <= theta_deg <= hi`.
    pub fn restrict_theta(&self, lo: f64, hi: f64) -> Result<Self> {
        let records = self
            .records
            .iter()
            .filter(|r| r.theta_deg >= lo && r.theta_deg <= hi)
            .copied()
            .collect();
        Self::new(records, self.weighted)
    }

    pub fn to_csv(&self) -> String {
        let mut out = HEADER.join(",");
        if self.weighted {
            out.push_str(",weight");
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{},{}",
                format_float(r.delta),
                format_float(r.theta_deg),
                format_float(r.g_p),
                format_float(r.g_c)
            );
            if self.weighted {
                let _ = write!(out, ",{}", format_float(r.weight));
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn key(r: &GainRecord) -> (u64, u64) {
    // +0.0 and -0.0 are the same key
    ((r.delta + 0.0).to_bits(), (r.theta_deg + 0.0).to_bits())
}

fn check_record(r: &GainRecord) -> std::result::Result<(), String> {
    for (name, v) in [("delta_gamma", r.delta), ("theta_deg", r.theta_deg)] {
        if !v.is_finite() {
            return Err(format!("{name} is not finite"));
        }
    }
    for (name, v) in [("g_p", r.g_p), ("g_c", r.g_c), ("weight", r.weight)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("{name} must be positive and finite, got {v}"));
        }
    }
    Ok(())
}

fn data_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Data {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads and validates a gain CSV. Errors carry the file path and the
/// offending line numbers.
pub fn load_gain_data(path: &Path) -> Result<GainDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gain_data(&text, path)
}

/// Parses CSV text; `path` only labels errors.
pub fn parse_gain_data(text: &str, path: &Path) -> Result<GainDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    let header = match rows.next() {
        None => return Err(data_error(path, "empty file")),
        Some(h) => h.map_err(|e| data_error(path, format!("line 1: {e}")))?,
    };
    let names: Vec<&str> = header.iter().collect();
    let weighted = match names.as_slice() {
        [a, b, c, d] if [*a, *b, *c, *d] == HEADER => false,
        [a, b, c, d, "weight"] if [*a, *b, *c, *d] == HEADER => true,
        _ => {
            return Err(data_error(
                path,
                format!(
                    "line 1: expected header `{}[,weight]`, found `{}`",
                    HEADER.join(","),
                    names.join(",")
                ),
            ))
        }
    };
    let width = if weighted { 5 } else { 4 };

    let mut records = Vec::new();
    let mut seen: HashMap<(u64, u64), u64> = HashMap::new();
    for row in rows {
        let row = row.map_err(|e| data_error(path, format!("malformed CSV: {e}")))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != width {
            return Err(data_error(
                path,
                format!("line {line}: expected {width} fields, found {}", row.len()),
            ));
        }
        let mut values = [1.0f64; 5];
        for (k, field) in row.iter().enumerate() {
            values[k] = field.trim().parse().map_err(|_| {
                let column = if k < 4 { HEADER[k] } else { "weight" };
                data_error(path, format!("line {line}: `{field}` is not a number ({column})"))
            })?;
        }
        let record = GainRecord {
            delta: values[0],
            theta_deg: values[1],
            g_p: values[2],
            g_c: values[3],
            weight: values[4],
        };
        check_record(&record).map_err(|m| data_error(path, format!("line {line}: {m}")))?;
        if let Some(first) = seen.insert(key(&record), line) {
            return Err(data_error(
                path,
                format!(
                    "lines {first} and {line}: duplicate (delta_gamma, theta_deg) = ({}, {})",
                    record.delta, record.theta_deg
                ),
            ));
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(data_error(path, "no data rows after the header"));
    }
    Ok(GainDataset { records, weighted })
}
