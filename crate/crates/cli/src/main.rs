//! `fkgap`: spectral-gap and log-Sobolev bounds for one-dimensional diffusions.
//!
//! Exit codes: 0 success, 1 a Monte-Carlo check failed, 2 configuration
//! error, 3 numerical non-convergence.

mod commands;
mod config;
mod fail;
mod render;
mod reproduce;

use clap::{Parser, Subcommand};
use config::{Format, RunConfig};
use fail::Failure;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fkgap", version, about = "Spectral-gap and log-Sobolev bounds for one-dimensional diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Gallery model, e.g. "quartic" or "double-well beta=0.5"; replaces the config's model block.
    #[arg(long, global = true, value_name = "NAME")]
    gallery: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Overrides the Monte-Carlo seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the eigensolver window half-width (intrinsic coordinate).
    #[arg(long, global = true, value_name = "R")]
    radius: Option<f64>,
    /// Overrides the eigensolver grid size.
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run the configured bound methods and assemble brackets.
    Bounds,
    /// Finite-difference spectral gap, eigenvector and V_a flatness.
    Oracle,
    /// Monte-Carlo intertwining and sub-intertwining checks.
    Check,
    /// Recompute every example constant against its reference value.
    Reproduce,
    /// Print U, V_sigma and the V_a of each configured weight.
    Inspect,
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match (&cli.config, &cli.gallery) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(g)) => RunConfig::for_gallery(g),
        (None, None) => return Err(Failure::config("give --config PATH or --gallery NAME")),
    };
    if let (Some(_), Some(g)) = (&cli.config, &cli.gallery) {
        cfg.model = RunConfig::for_gallery(g).model;
    }
    if let Some(s) = cli.seed {
        cfg.mc.seed = Some(s);
    }
    if cli.radius.is_some() || cli.grid.is_some() {
        let mut o = cfg.oracle_config()?;
        if let Some(r) = cli.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Failure::config(format!("--radius must be positive, got {r}")));
            }
            o.radius = Some(r);
        }
        if let Some(n) = cli.grid {
            if n < 16 {
                return Err(Failure::config(format!("--grid must be at least 16, got {n}")));
            }
            o.n = n;
        }
        cfg.oracle = Some(o);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let (doc, code, out) = if let Command::Reproduce = cli.command {
        let out = match &cli.config {
            Some(p) => RunConfig::load(p)?.output,
            None => Default::default(),
        };
        (reproduce::reproduce(), 0, out)
    } else {
        let cfg = load(cli)?;
        let (doc, code) = match cli.command {
            Command::Bounds => (commands::bounds(&cfg)?, 0),
            Command::Oracle => (commands::oracle_cmd(&cfg)?, 0),
            Command::Check => commands::check(&cfg)?,
            Command::Inspect => (commands::inspect(&cfg)?, 0),
            Command::Reproduce => unreachable!("handled above"),
        };
        (doc, code, cfg.output)
    };
    let format = cli.format.or(out.format).unwrap_or(Format::Table);
    let text = doc.render(format);
    match cli.output.as_ref().or(out.path.as_ref()) {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?,
        None => {
            // A closed pipe is not worth a panic.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
