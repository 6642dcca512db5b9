//! The named experiments. Each returns a JSON summary and a CSV table.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use serde_json::{json, Value};
use tfscreen::io::{sci, solution_to_csv, SolveSummary};
use tfscreen::tf_core::{psi, psi_prime, s_inverse};
use tfscreen::{
    eval_fraclap_analytic, frac_lap_curve, katsnelson_f, local_log_slope, make_log_grid, newton_remainder,
    sample_potential, solve_background, solve_neutral, total_charge, universality_probe, Background, FracLapQuadConfig,
    Function, Potential, Solution,
};

use crate::config::{Experiment, ExperimentConfig};

pub struct Artifacts {
    pub summary: Value,
    pub curves: String,
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(sci).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

/// Non-finite numbers become `null` in JSON.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn run(cfg: &ExperimentConfig, base: &Path) -> Result<Artifacts> {
    let spec = cfg.potential.to_spec(base)?;
    match cfg.experiment {
        Experiment::SolveNeutral => neutral(cfg, &spec),
        Experiment::SolveBackground => background(cfg, &spec),
        Experiment::BarrierCheck => barrier(cfg, &spec),
        Experiment::FraclapValidate => fraclap(cfg, &spec),
        Experiment::Universality => universality(cfg, &spec),
        Experiment::NewtonCheck => newton(cfg, &spec),
    }
}

fn radii(cfg: &ExperimentConfig, default: &[f64]) -> Vec<f64> {
    cfg.probe.radii.clone().unwrap_or_else(|| default.to_vec())
}

fn window(cfg: &ExperimentConfig, lo: f64, hi: f64) -> (f64, f64) {
    (cfg.probe.r_lo.unwrap_or(lo), cfg.probe.r_hi.unwrap_or(hi))
}

fn probe_values(u: &Function, radii: &[f64]) -> Value {
    match universality_probe(u, radii) {
        Ok(p) => json!({ "radii": radii, "r_ln_r_u": p }),
        Err(e) => json!({ "radii": radii, "error": e.to_string() }),
    }
}

fn solve_summary(res: &Solution) -> Value {
    serde_json::to_value(SolveSummary::of(res)).expect("summary serializes")
}

fn neutral(cfg: &ExperimentConfig, spec: &Potential) -> Result<Artifacts> {
    let res = solve_neutral(spec, &cfg.solver_config()?)?;
    let summary = json!({
        "experiment": "solve_neutral",
        "solution": solve_summary(&res),
        "total_charge": num(res.total_charge),
        "probe": probe_values(&res.u, &radii(cfg, &[1e2, 1e3, 1e4])),
    });
    Ok(Artifacts { summary, curves: solution_to_csv(&res) })
}

fn background(cfg: &ExperimentConfig, spec: &Potential) -> Result<Artifacts> {
    let bg: Background = cfg.background_params()?;
    let solver = cfg.solver_config()?;
    let res = solve_background(spec, &bg, &solver)?;
    let v = sample_potential(spec, &solver.grid)?;
    let probe = radii(cfg, &[1e2, 1e3]);
    let slopes: Vec<Value> =
        probe.iter().map(|&r| local_log_slope(&res.u, r).map(num).unwrap_or(Value::Null)).collect();
    let phi_positive = res.rho.values().iter().all(|&x| x > 0.0);
    let u_bounded = res.u.values().iter().zip(v.values()).all(|(&u, &vv)| u >= 0.0 && u <= vv);
    let summary = json!({
        "experiment": "solve_background",
        "rho_bar": bg.rho_bar,
        "solution": solve_summary(&res),
        "total_charge": num(res.total_charge),
        "probe": { "radii": probe, "log_slope_u": slopes },
        "phi_positive": phi_positive,
        "u_between_zero_and_v": u_bounded,
    });
    Ok(Artifacts { summary, curves: solution_to_csv(&res) })
}

fn barrier(cfg: &ExperimentConfig, spec: &Potential) -> Result<Artifacts> {
    let grid = make_log_grid(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.n)?;
    let u = sample_potential(spec, &grid)?;
    let lap = frac_lap_curve(&u, &FracLapQuadConfig::default())?;
    let (lo, hi) = window(cfg, 1e2, 1e4);
    let rows: Vec<Vec<f64>> = lap
        .grid()
        .nodes()
        .iter()
        .zip(lap.values())
        .filter(|(&r, _)| r >= lo && r <= hi)
        .map(|(&r, &l)| vec![r, u.eval(r), l, -l * r * r * r.ln() * r.ln()])
        .collect();
    if rows.is_empty() {
        bail!("no grid node inside the window [{lo}, {hi}]");
    }
    let ratios: Vec<f64> = rows.iter().map(|row| row[3]).collect();
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let summary = json!({
        "experiment": "barrier_check",
        "window": [lo, hi],
        "bracket": [min, max],
        "max_over_min": max / min,
        "positive": min > 0.0,
        "nodes": rows.len(),
    });
    Ok(Artifacts { summary, curves: table(&["r", "U", "fraclap", "ratio"], rows) })
}

fn fraclap(cfg: &ExperimentConfig, spec: &Potential) -> Result<Artifacts> {
    let grid = make_log_grid(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.n)?;
    let u = sample_potential(spec, &grid)?;
    let lap = frac_lap_curve(&u, &FracLapQuadConfig::default())?;
    let (lo, hi) = window(cfg, 0.1, 100.0);
    let mut rows = Vec::new();
    for (&r, &l) in lap.grid().nodes().iter().zip(lap.values()) {
        if r >= lo && r <= hi {
            let exact = eval_fraclap_analytic(spec, r)?;
            rows.push(vec![r, l, exact, ((l - exact) / exact).abs()]);
        }
    }
    if rows.is_empty() {
        bail!("no grid node inside the window [{lo}, {hi}]");
    }
    let max_rel = rows.iter().map(|row| row[3]).fold(0.0, f64::max);
    let sign_change = rows.windows(2).find(|w| (w[0][1] > 0.0) != (w[1][1] > 0.0)).map(|w| {
        let (r0, r1, f0, f1) = (w[0][0], w[1][0], w[0][1], w[1][1]);
        // Linear interpolation in ln r.
        let s = f0 / (f0 - f1);
        (r0.ln() + s * (r1 / r0).ln()).exp()
    });
    let summary = json!({
        "experiment": "fraclap_validate",
        "window": [lo, hi],
        "max_rel_error": max_rel,
        "sign_change": sign_change,
        "grid_spacing": grid.h(),
    });
    Ok(Artifacts { summary, curves: table(&["r", "numeric", "analytic", "rel_error"], rows) })
}

fn universality(cfg: &ExperimentConfig, spec: &Potential) -> Result<Artifacts> {
    let res = solve_neutral(spec, &cfg.solver_config()?)?;
    let f = katsnelson_f(&res.u)?;
    let rows = f.iter().map(|&(t, v)| vec![t, v, t * v]);
    let summary = json!({
        "experiment": "universality",
        "converged": res.converged,
        "total_charge": num(res.total_charge),
        "probe": probe_values(&res.u, &radii(cfg, &[1e2, 1e3, 1e4])),
        "u_tail": solve_summary(&res)["u_tail"],
    });
    Ok(Artifacts { summary, curves: table(&["t", "F", "t_F"], rows) })
}

fn newton(cfg: &ExperimentConfig, spec: &Potential) -> Result<Artifacts> {
    let grid = make_log_grid(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.n)?;
    let density = sample_potential(spec, &grid)?;
    let probe = radii(cfg, &[10.0, 100.0]);
    let analytic = |r: f64| match spec {
        Potential::Dipole { charge } => Some(charge * (r / (1.0 + r * r).sqrt() - 1.0)),
        _ => None,
    };
    let mut rows = Vec::new();
    for &r in &probe {
        let rem = newton_remainder(&density, r)?;
        rows.push(vec![r, rem, analytic(r).unwrap_or(f64::NAN)]);
    }
    let summary = json!({
        "experiment": "newton_check",
        "radii": probe,
        "remainder": rows.iter().map(|row| num(row[1])).collect::<Vec<_>>(),
        "analytic": rows.iter().map(|row| num(row[2])).collect::<Vec<_>>(),
        "total_charge": num(total_charge(&density)?),
    });
    Ok(Artifacts { summary, curves: table(&["r", "remainder", "analytic"], rows) })
}

/// Tables of `(φ, Ψ, Ψ′)` and `(u, S)` for a background density.
pub fn psi_curves(bg: &Background, lo: f64, hi: f64, points: usize) -> (String, String) {
    let xs: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let psi_rows = xs.iter().map(|&phi| vec![phi, psi(bg, phi), psi_prime(bg, phi)]);
    let s_rows = xs.iter().map(|&u| vec![u, s_inverse(bg, u)]);
    (table(&["phi", "psi", "psi_prime"], psi_rows), table(&["u", "S"], s_rows))
}
