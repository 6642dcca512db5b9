//! CSV and JSON persistence of radial functions.
//!
//! A function is stored as `r,value` rows (12 significant digits) next to a
//! JSON sidecar holding its tail model and inner value.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::radial::{RadialFunction, RadialGrid, TailModel};
use crate::solver::SolveResult;
use crate::tf_core::EnergyBreakdown;
use crate::{Error, Result};

/// Twelve significant digits in scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tail_kind: String,
    pub coefficient: f64,
    #[serde(default)]
    pub exponent: f64,
    #[serde(default)]
    pub shift: f64,
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub log_exponent: f64,
    pub inner_value: f64,
}

impl Sidecar {
    pub fn of(f: &RadialFunction<f64>) -> Self {
        let (exponent, shift, drift, log_exponent) = match *f.tail() {
            TailModel::None | TailModel::Zero => (0.0, 0.0, 0.0, 0.0),
            TailModel::Power { exponent, .. } => (exponent, 0.0, 0.0, 0.0),
            TailModel::InverseLog { shift, drift, .. } => (1.0, shift, drift, 1.0),
            TailModel::PowerLog { exponent, shift, drift, log_exponent, .. } => (exponent, shift, drift, log_exponent),
        };
        Self {
            tail_kind: f.tail().kind().to_string(),
            coefficient: f.tail().coefficient(),
            exponent,
            shift,
            drift,
            log_exponent,
            inner_value: f.inner_value(),
        }
    }

    pub fn tail(&self) -> Result<TailModel<f64>> {
        let c = self.coefficient;
        Ok(match self.tail_kind.as_str() {
            "none" => TailModel::None,
            "zero" => TailModel::Zero,
            "power" => TailModel::Power { coefficient: c, exponent: self.exponent },
            "inverse_log" => TailModel::InverseLog { coefficient: c, shift: self.shift, drift: self.drift },
            "power_log" => TailModel::PowerLog {
                coefficient: c,
                exponent: self.exponent,
                shift: self.shift,
                drift: self.drift,
                log_exponent: self.log_exponent,
            },
            other => return Err(Error::Format(format!("unknown tail kind `{other}`"))),
        })
    }
}

/// Path of the JSON sidecar belonging to a CSV file.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn radial_to_csv(f: &RadialFunction<f64>) -> String {
    let mut out = String::from("r,value\n");
    for (&r, &v) in f.grid().nodes().iter().zip(f.values()) {
        writeln!(out, "{},{}", sci(r), sci(v)).unwrap();
    }
    out
}

pub fn write_radial(f: &RadialFunction<f64>, csv: &Path) -> Result<()> {
    fs::write(csv, radial_to_csv(f))?;
    fs::write(sidecar_path(csv), serde_json::to_string_pretty(&Sidecar::of(f))?)?;
    Ok(())
}

/// Reads a function written by [`write_radial`]. The sidecar is optional;
/// without it the tail is `none` and the inner value is the first sample.
pub fn read_radial(csv: &Path) -> Result<RadialFunction<f64>> {
    let text = fs::read_to_string(csv)?;
    let mut rows = text.lines().filter(|l| !l.trim().is_empty());
    let header = rows.next().ok_or_else(|| Error::Format("empty table".into()))?;
    if header.split(',').map(str::trim).collect::<Vec<_>>() != ["r", "value"] {
        return Err(Error::Format(format!("expected header `r,value`, found `{header}`")));
    }
    let (mut rs, mut vs) = (Vec::new(), Vec::new());
    for (i, line) in rows.enumerate() {
        let mut cols = line.split(',').map(|c| c.trim().parse::<f64>());
        match (cols.next(), cols.next(), cols.next()) {
            (Some(Ok(r)), Some(Ok(v)), None) => {
                rs.push(r);
                vs.push(v);
            }
            _ => return Err(Error::Format(format!("malformed row {}: `{line}`", i + 2))),
        }
    }
    if rs.len() < 2 {
        return Err(Error::Format("table needs at least two rows".into()));
    }
    let grid = RadialGrid::new(rs[0], rs[rs.len() - 1], rs.len())?;
    for (&expected, &r) in grid.nodes().iter().zip(&rs) {
        if ((r - expected) / expected).abs() > 1e-9 {
            return Err(Error::Format(format!("radius {r} is not on a logarithmic grid (expected {expected})")));
        }
    }
    let f = RadialFunction::new(grid, vs, TailModel::None)?;
    let side = sidecar_path(csv);
    if side.exists() {
        let meta: Sidecar = serde_json::from_str(&fs::read_to_string(side)?)?;
        Ok(f.with_tail(meta.tail()?).with_inner_value(meta.inner_value))
    } else {
        Ok(f)
    }
}

/// Node table `r,u,rho,U_rho,residual` of a solution.
pub fn solution_to_csv(res: &SolveResult<f64>) -> String {
    let mut out = String::from("r,u,rho,U_rho,residual\n");
    let cols = [res.u.values(), res.rho.values(), res.potential_of_rho.values(), res.residual.values()];
    for (i, &r) in res.u.grid().nodes().iter().enumerate() {
        let row: Vec<String> = std::iter::once(r).chain(cols.iter().map(|c| c[i])).map(sci).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

/// Scalar summary of a solution; non-finite values serialize as `null`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub iterations: usize,
    pub total_charge: f64,
    pub energy: EnergyBreakdown<f64>,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    pub u_tail: Sidecar,
    pub rho_tail: Sidecar,
}

impl SolveSummary {
    pub fn of(res: &SolveResult<f64>) -> Self {
        Self {
            converged: res.converged,
            iterations: res.iterations,
            total_charge: res.total_charge,
            energy: res.energy,
            final_residual: res.residual_history.last().copied().unwrap_or(f64::NAN),
            residual_history: res.residual_history.clone(),
            energy_history: res.energy_history.clone(),
            u_tail: Sidecar::of(&res.u),
            rho_tail: Sidecar::of(&res.rho),
        }
    }
}
