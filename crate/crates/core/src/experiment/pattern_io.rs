//! Plain-text pattern files.
//!
//! ```text
//! # dtheta_deg=5
//! # dphi_deg=5
//! # trp_dbm=15
//! theta_deg,phi_deg,eirp_mw
//! 0,0,31.6227766016838
//! 0,5,31.6227766016838
//! ...
//! ```
//!
//! One row per grid node, θ-major. `trp_dbm` is optional on ingest; when it
//! is absent the TRP is computed from the samples.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::runner::write_atomic;
use crate::error::{Error, Result};
use crate::metrics::trp_mw;
use crate::pattern::EirpPattern;
use crate::sphere::AngularGrid;
use crate::units::mw_to_dbm;

const COLUMNS: [&str; 3] = ["theta_deg", "phi_deg", "eirp_mw"];
const NODE_TOLERANCE_DEG: f64 = 1e-6;

pub fn export_pattern(p: &EirpPattern) -> String {
    let g = p.grid();
    let mut out = String::new();
    writeln!(out, "# dtheta_deg={}", g.dtheta_deg()).unwrap();
    writeln!(out, "# dphi_deg={}", g.dphi_deg()).unwrap();
    writeln!(out, "# trp_dbm={}", p.trp_dbm()).unwrap();
    writeln!(out, "{}", COLUMNS.join(",")).unwrap();
    for ((i, j), v) in p.values().indexed_iter() {
        writeln!(out, "{},{},{}", g.theta_deg(i), g.phi_deg(j), v).unwrap();
    }
    out
}

pub fn write_pattern(p: &EirpPattern, path: &Path) -> Result<()> {
    write_atomic(path, export_pattern(p).as_bytes())
}

pub fn ingest_pattern(path: &Path) -> Result<EirpPattern> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pattern(&text).map_err(|e| match e {
        Error::PatternFormat { message, .. } => Error::PatternFormat {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

fn bad(message: impl Into<String>) -> Error {
    Error::PatternFormat {
        path: "<input>".into(),
        message: message.into(),
    }
}

fn number(field: &str, what: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(format!("line {line}: {what} '{}' is not a finite number", field.trim())))
}

/// Parses the text of a pattern file.
pub fn parse_pattern(text: &str) -> Result<EirpPattern> {
    let mut meta = BTreeMap::new();
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    let header = loop {
        match lines.next() {
            None => return Err(bad("no column header row")),
            Some((_, "")) => continue,
            Some((n, l)) if l.starts_with('#') => {
                let body = l.trim_start_matches('#').trim();
                if let Some((k, v)) = body.split_once('=') {
                    meta.insert(k.trim().to_string(), (n, v.trim().to_string()));
                }
            }
            Some((n, l)) => break (n, l),
        }
    };
    let step = |key: &str| -> Result<f64> {
        let (n, v) = meta.get(key).ok_or_else(|| bad(format!("missing header field '{key}'")))?;
        number(v, key, *n)
    };
    let grid = AngularGrid::new(step("dtheta_deg")?, step("dphi_deg")?)
        .map_err(|e| bad(format!("grid header: {e}")))?;
    let declared_trp = meta.get("trp_dbm").map(|(n, v)| number(v, "trp_dbm", *n)).transpose()?;

    let cols: Vec<&str> = header.1.split(',').map(str::trim).collect();
    if let Some(missing) = COLUMNS.iter().find(|c| !cols.contains(c)) {
        return Err(bad(format!("line {}: missing column '{missing}'", header.0)));
    }
    if cols.len() != COLUMNS.len() {
        return Err(bad(format!(
            "line {}: expected columns {}, found {}",
            header.0,
            COLUMNS.join(","),
            cols.join(",")
        )));
    }
    let pos = COLUMNS.map(|c| cols.iter().position(|x| *x == c).unwrap());

    let mut values = Array2::from_elem((grid.rows(), grid.n_phi()), f64::NAN);
    let node = |v: f64, step: f64, count: usize, what: &str, line: usize| -> Result<usize> {
        let k = (v / step).round();
        if (v - k * step).abs() > NODE_TOLERANCE_DEG || k < 0.0 || k as usize >= count {
            return Err(bad(format!("line {line}: {what} {v} is not on the {step} deg grid")));
        }
        Ok(k as usize)
    };
    for (n, l) in lines {
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != COLUMNS.len() {
            return Err(bad(format!("line {n}: expected {} fields, found {}", COLUMNS.len(), f.len())));
        }
        let theta = number(f[pos[0]], "theta_deg", n)?;
        let phi = number(f[pos[1]], "phi_deg", n)?;
        let eirp = number(f[pos[2]], "eirp_mw", n)?;
        let i = node(theta, grid.dtheta_deg(), grid.rows(), "theta", n)?;
        let j = node(phi, grid.dphi_deg(), grid.n_phi(), "phi", n)?;
        if eirp < 0.0 {
            return Err(bad(format!("line {n}: negative EIRP {eirp} mW")));
        }
        if !values[[i, j]].is_nan() {
            return Err(bad(format!("line {n}: duplicate node theta={theta} phi={phi}")));
        }
        values[[i, j]] = eirp;
    }
    if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| v.is_nan()) {
        let absent = values.iter().filter(|v| v.is_nan()).count();
        return Err(bad(format!(
            "no sample at theta={} phi={} ({absent} of {} grid nodes missing)",
            grid.theta_deg(i),
            grid.phi_deg(j),
            grid.len()
        )));
    }
    let trp_dbm = match declared_trp {
        Some(t) => t,
        None => {
            let provisional = EirpPattern::new(grid, values.clone(), 0.0)?;
            mw_to_dbm(trp_mw(&provisional)).ok_or_else(|| bad("pattern radiates no power"))?
        }
    };
    EirpPattern::new(grid, values, trp_dbm)
}
