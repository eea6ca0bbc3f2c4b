mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::ExperimentConfig;
use output::RunDir;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invariant breach: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<bvpm::Error> for CliError {
    fn from(e: bvpm::Error) -> Self {
        match e {
            bvpm::Error::Domain(_) | bvpm::Error::Precondition(_) => CliError::Config(e.to_string()),
            bvpm::Error::Numerical { .. } => CliError::Numerical(e.to_string()),
            bvpm::Error::Invariant(_) => CliError::Invariant(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "bvpm", version, about = "Boundary value problems with measure data: experiment driver")]
struct Cli {
    /// JSON config; keys not given keep their defaults.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output root; each run writes `<out>/<subcommand>-<config hash>`.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Worker threads (0: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Grid size as M_radial x M_angular, e.g. 128x128.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Override a config key by dotted path, e.g. --set solver.atom_width=4.
    #[arg(long = "set", global = true, value_parser = parse_set)]
    sets: Vec<(String, String)>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Truncation chain u_k for the configured potential and measure.
    Solve,
    /// Capacity primal, dual and witness measure on boundary arcs.
    Capacity,
    /// Reduced measure μ* and per-node singular-set detectors.
    Reduced,
    /// Z_V and Sing_V detectors at the configured nodes.
    SingularSet,
    /// Regular and singular boundary arcs, trace and extended trace.
    Trace,
    /// Integral-condition verdicts over the configured exponents.
    Criteria,
    /// Acceptance criteria.
    Suite,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Capacity => "capacity",
            Command::Reduced => "reduced",
            Command::SingularSet => "singular-set",
            Command::Trace => "trace",
            Command::Criteria => "criteria",
            Command::Suite => "suite",
        }
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (m, k) = s.split_once(['x', 'X']).ok_or_else(|| format!("'{s}' is not of the form MxK"))?;
    let n = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}"));
    Ok((n(m)?, n(k)?))
}

fn parse_set(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("'{s}' is not of the form key=value"))?;
    Ok((k.trim().to_string(), v.to_string()))
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let mut sets = vec![];
    if let Some((m, k)) = cli.grid {
        sets.push(("grid.M_radial".to_string(), m.to_string()));
        sets.push(("grid.M_angular".to_string(), k.to_string()));
    }
    if let Some(w) = cli.workers {
        sets.push(("workers".to_string(), w.to_string()));
    }
    sets.extend(cli.sets.iter().cloned());
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &sets)?;
    if cfg.workers > 0 {
        bvpm::par::init_workers(cfg.workers);
    }
    let name = cli.command.name();
    let t = Instant::now();
    let mut out = RunDir::create(&cli.out, name, &cfg)?;
    match cli.command {
        Command::Solve => commands::solve(&cfg, &mut out)?,
        Command::Capacity => commands::capacity_cmd(&cfg, &mut out)?,
        Command::Reduced => commands::reduced(&cfg, &mut out)?,
        Command::SingularSet => commands::singular_set(&cfg, &mut out)?,
        Command::Trace => commands::trace(&cfg, &mut out)?,
        Command::Criteria => commands::criteria(&cfg, &mut out)?,
        Command::Suite => commands::suite(&cfg, &mut out)?,
    }
    let dir = out.dir.clone();
    let manifest = out.finish(name, t.elapsed().as_secs_f64())?;
    let failed: Vec<&str> = manifest.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    for c in &manifest.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{} files in {}", manifest.files.len() + 1, dir.display());
    if !failed.is_empty() {
        eprintln!("{} check(s) failed", failed.len());
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
