mod config;
mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;
use tfscreen::BackgroundParams;

use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "tfscreen", version, about = "Thomas–Fermi screening in graphene")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML configuration file.
    Run {
        config: PathBuf,
        /// Overrides the `output_dir` entry of the configuration.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// `dotted.key=value`, applied before validation. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Tabulate Ψ, Ψ′ and S for a background density.
    PsiCurves {
        #[arg(long, default_value_t = 1.0)]
        rho_bar: f64,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Experiment(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Experiment(_) => "experiment",
            Self::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        let (Self::Config(e) | Self::Experiment(e) | Self::Io(e)) = self;
        format!("{e:#}")
    }
}

fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<(), Failure> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::Io)?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display())).map_err(Failure::Io)?;
    }
    Ok(())
}

fn run(config: &Path, output_dir: Option<PathBuf>, overrides: &[String]) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config, overrides).map_err(Failure::Config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let out = output_dir.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let art = experiments::run(&cfg, base).map_err(Failure::Experiment)?;
    let summary = serde_json::to_string_pretty(&art.summary).expect("summary serializes") + "\n";
    write_outputs(&out, &[("result.json", summary), ("curves.csv", art.curves)])
}

fn psi_curves(rho_bar: f64, min: f64, max: f64, points: usize, out: &Path) -> Result<(), Failure> {
    let bg = BackgroundParams::new(rho_bar).map_err(|e| Failure::Config(e.into()))?;
    if !(points >= 2 && min < max) {
        return Err(Failure::Config(anyhow::anyhow!(
            "need at least two points on a non-empty range, got {points} on [{min}, {max}]"
        )));
    }
    let (psi, s) = experiments::psi_curves(&bg, min, max, points);
    write_outputs(out, &[("psi.csv", psi), ("s.csv", s)])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, output_dir, overrides } => run(&config, output_dir, &overrides),
        Command::PsiCurves { rho_bar, min, max, points, output_dir } => {
            psi_curves(rho_bar, min, max, points, &output_dir)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": { "kind": f.kind(), "message": f.message() } }));
            ExitCode::FAILURE
        }
    }
}
