//! Twin-beam gains at single points and over two-dimensional grids.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doppler::{averaged_susceptibilities, DopplerConfig};
use crate::params::{kinematics, ModelParams};
use crate::propagation::{coupling, coupling_with_mismatch, solve_closed_form, CouplingSet, FieldPair};
use crate::susceptibility::SusceptibilitySet;
use crate::{Error, Result};

/// How the phase mismatch of a point is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Pump-probe angle [rad]; the mismatch follows from the kinematics and
    /// the pump index.
    Angle(f64),
    /// Collinear beams with an imposed mismatch [rad/m].
    Mismatch(f64),
}

/// Everything computed for one (delta, geometry) point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwinBeam {
    pub chi: SusceptibilitySet,
    pub coupling: CouplingSet,
    pub fields: FieldPair,
}

/// Susceptibilities (velocity averaged if enabled), coupling coefficients and
/// closed-form output fields for a unit probe seed.
pub fn solve_twin_beam(
    params: &ModelParams,
    delta: f64,
    geometry: Geometry,
    doppler: &DopplerConfig,
) -> Result<TwinBeam> {
    let theta = match geometry {
        Geometry::Angle(t) => t,
        Geometry::Mismatch(_) => 0.0,
    };
    let kin = kinematics(params, delta, theta)?;
    let chi = averaged_susceptibilities(params, delta, &kin, doppler)?;
    let coupling = match geometry {
        Geometry::Angle(_) => coupling(&chi, &kin, params.pump_index()),
        Geometry::Mismatch(dkz) => {
            if !dkz.is_finite() {
                return Err(Error::invalid("dkz", "not finite"));
            }
            coupling_with_mismatch(&chi, &kin, dkz)
        }
    };
    let fields = solve_closed_form(&coupling, params.length)?;
    Ok(TwinBeam {
        chi,
        coupling,
        fields,
    })
}

/// Second grid axis of a gain map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum SecondAxis {
    /// Pump-probe angle [deg].
    ThetaDeg(Vec<f64>),
    /// Imposed phase mismatch [rad/m].
    DkzRadM(Vec<f64>),
}

impl SecondAxis {
    pub fn values(&self) -> &[f64] {
        match self {
            SecondAxis::ThetaDeg(v) | SecondAxis::DkzRadM(v) => v,
        }
    }

    pub fn column_name(&self) -> &'static str {
        match self {
            SecondAxis::ThetaDeg(_) => "theta_deg",
            SecondAxis::DkzRadM(_) => "dkz_rad_m",
        }
    }

    fn geometry(&self, k: usize) -> Geometry {
        match self {
            SecondAxis::ThetaDeg(v) => Geometry::Angle(v[k].to_radians()),
            SecondAxis::DkzRadM(v) => Geometry::Mismatch(v[k]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub row: usize,
    pub col: usize,
    pub message: String,
}

/// Gains on a grid. Row `i` belongs to `second_axis[i]`, column `j` to
/// `delta_axis[j]`; cells whose evaluation failed are `None` and listed in
/// `failures`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainMap {
    pub delta_axis: Vec<f64>,
    pub second_axis: SecondAxis,
    pub gp_grid: Vec<Vec<Option<f64>>>,
    pub gc_grid: Vec<Vec<Option<f64>>>,
    pub params: ModelParams,
    pub doppler: DopplerConfig,
    pub failures: Vec<CellFailure>,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(name, "axis is empty"));
    }
    if let Some(v) = axis.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(name, format!("non-finite value {v}")));
    }
    let up = axis.windows(2).all(|w| w[1] > w[0]);
    let down = axis.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::invalid(name, "axis must be strictly monotone"));
    }
    Ok(())
}

/// Evenly spaced axis with `n` points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Gains over `delta_axis` x `second_axis`. Cells are evaluated in parallel
/// and stored in grid order, so the result does not depend on scheduling.
/// Per-cell failures are recorded, not propagated.
pub fn gain_map(
    params: &ModelParams,
    delta_axis: &[f64],
    second_axis: &SecondAxis,
    doppler: &DopplerConfig,
) -> Result<GainMap> {
    params.validate()?;
    if doppler.enabled {
        doppler.validate()?;
    }
    check_axis("delta_axis", delta_axis)?;
    check_axis(second_axis.column_name(), second_axis.values())?;
    if let SecondAxis::ThetaDeg(v) = second_axis {
        if v.iter().any(|t| !(0.0..90.0).contains(t)) {
            return Err(Error::invalid("theta_deg", "angles must lie in [0, 90)"));
        }
    }
    let rows = second_axis.values().len();
    let cols = delta_axis.len();
    let cells: Vec<Result<FieldPair>> = (0..rows * cols)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / cols, k % cols);
            solve_twin_beam(params, delta_axis[j], second_axis.geometry(i), doppler).map(|t| t.fields)
        })
        .collect();
    let mut gp_grid = vec![vec![None; cols]; rows];
    let mut gc_grid = vec![vec![None; cols]; rows];
    let mut failures = Vec::new();
    for (k, cell) in cells.into_iter().enumerate() {
        let (i, j) = (k / cols, k % cols);
        match cell {
            Ok(f) => {
                gp_grid[i][j] = Some(f.g_p);
                gc_grid[i][j] = Some(f.g_c);
            }
            Err(e) => failures.push(CellFailure {
                row: i,
                col: j,
                message: e.to_string(),
            }),
        }
    }
    Ok(GainMap {
        delta_axis: delta_axis.to_vec(),
        second_axis: second_axis.clone(),
        gp_grid,
        gc_grid,
        params: *params,
        doppler: *doppler,
        failures,
    })
}

/// Formats a float with 17 significant digits, which round-trips exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl GainMap {
    /// Largest finite value of a grid with its (row, col).
    pub fn peak(grid: &[Vec<Option<f64>>]) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, row) in grid.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = v.filter(|v| v.is_finite()) {
                    if best.is_none_or(|b| v > b.0) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        best
    }

    /// CSV with one line per successful cell, second axis outermost.
    pub fn to_csv(&self) -> String {
        let mut out = format!("delta_gamma,{},g_p,g_c\n", self.second_axis.column_name());
        for (i, s) in self.second_axis.values().iter().enumerate() {
            for (j, d) in self.delta_axis.iter().enumerate() {
                if let (Some(gp), Some(gc)) = (self.gp_grid[i][j], self.gc_grid[i][j]) {
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        format_float(*d),
                        format_float(*s),
                        format_float(gp),
                        format_float(gc)
                    );
                }
            }
        }
        out
    }

    /// Sidecar metadata: parameters, Doppler settings, axes and failures.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.params.to_config(),
            "doppler": self.doppler,
            "delta_axis": self.delta_axis,
            "second_axis": self.second_axis,
            "shape": [self.second_axis.values().len(), self.delta_axis.len()],
            "failures": self.failures,
        })
    }

    pub fn write(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        write_file(csv_path, &self.to_csv())?;
        let text = serde_json::to_string_pretty(&self.metadata())?;
        write_file(json_path, &text)
    }
}
