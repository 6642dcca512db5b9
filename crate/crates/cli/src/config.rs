//! Experiment configuration: a TOML document validated against a fixed schema,
//! with `key.path=value` overrides applied before validation.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use tfscreen::potentials::PotentialConfig;
use tfscreen::{make_log_grid, BackgroundParams, Config, IterationScheme, RieszQuadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SolveNeutral,
    SolveBackground,
    BarrierCheck,
    FraclapValidate,
    Universality,
    NewtonCheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundConfig {
    pub rho_bar: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverEntries {
    pub scheme: String,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub anderson_depth: usize,
}

impl Default for SolverEntries {
    fn default() -> Self {
        Self { scheme: "newton".into(), damping: 0.3, tol: 1e-8, max_iter: 500, anderson_depth: 0 }
    }
}

/// Radii at which scalar diagnostics are reported, and the window of the
/// curve-based checks.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub radii: Option<Vec<f64>>,
    pub r_lo: Option<f64>,
    pub r_hi: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub background: Option<BackgroundConfig>,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverEntries,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads, overrides and validates a configuration file.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text).context("parsing configuration")?;
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        let cfg: Self = toml::Value::Table(doc).try_into().context("validating configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment == Experiment::SolveBackground && self.background.is_none() {
            bail!("experiment `solve_background` requires a [background] table with `rho_bar`");
        }
        let kind = self.potential.kind.as_str();
        let allowed: &[&str] = match self.experiment {
            Experiment::BarrierCheck => &["barrier"],
            Experiment::FraclapValidate => &["point_charge", "dipole"],
            Experiment::NewtonCheck => &["point_charge", "dipole", "tabulated"],
            _ => &["point_charge", "dipole", "barrier", "tabulated"],
        };
        if !allowed.contains(&kind) {
            bail!("experiment `{:?}` does not accept potential kind `{kind}`", self.experiment);
        }
        Ok(())
    }

    pub fn solver_config(&self) -> Result<Config> {
        let g = &self.grid;
        let grid = make_log_grid(g.r_min, g.r_max, g.n)?;
        let s = &self.solver;
        let cfg = Config {
            grid,
            damping: s.damping,
            tol: s.tol,
            max_iter: s.max_iter,
            anderson_depth: s.anderson_depth,
            scheme: s.scheme.parse::<IterationScheme>()?,
            riesz: RieszQuadConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn background_params(&self) -> Result<BackgroundParams<f64>> {
        let b = self.background.as_ref().ok_or_else(|| anyhow!("missing [background] table"))?;
        Ok(BackgroundParams::new(b.rho_bar)?)
    }
}

/// Sets `a.b.c = value` in a TOML table. The value is parsed as a TOML
/// literal when possible and taken as a bare string otherwise.
pub fn apply_override(doc: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item.split_once('=').ok_or_else(|| anyhow!("override `{item}` is not of the form key=value"))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        bail!("override `{item}` has an empty key segment");
    }
    let value = parse_literal(raw.trim());
    let (last, parents) = path.split_last().unwrap();
    let mut table = doc;
    for seg in parents {
        let entry = table.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| anyhow!("override `{item}`: `{seg}` is not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
