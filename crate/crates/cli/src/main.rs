//! `hamcap`: periodic orbits, action windows and capacity estimates for
//! explicit Hamiltonians.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for
//! configuration errors, invalid brackets and other unusable input.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "hamcap", version, about = "Periodic orbits and relative capacities of explicit Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the profiles (and the squeezing pair with its tangent lines).
    Profiles {
        #[command(flatten)]
        run: RunArgs,
        /// Sample points along p.
        #[arg(long, default_value_t = 401)]
        samples: usize,
    },
    /// Find 1-periodic orbits in the configured class.
    Orbits(RunArgs),
    /// Bracket the relative capacity of the configured family.
    Capacity(RunArgs),
    /// Run every acceptance check.
    Verify {
        #[arg(long, default_value = "out/verify")]
        out: PathBuf,
    },
    /// Print a preset configuration as JSON (a starting point for --config).
    Config {
        preset: String,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in preset (see `hamcap presets`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds per state dimension.
    #[arg(long)]
    grid: Option<usize>,
    /// Integration steps per unit time.
    #[arg(long)]
    steps: Option<usize>,
    /// Closure tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match (&self.preset, &self.config) {
            (_, Some(path)) => RunConfig::load(path)?,
            (Some(name), None) => RunConfig::preset(name)?,
            (None, None) => anyhow::bail!("give --preset or --config"),
        };
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(grid) = self.grid {
            cfg.grid = grid;
        }
        if let Some(steps) = self.steps {
            cfg.steps = steps;
        }
        if let Some(tol) = self.tol {
            cfg.tol = tol;
        }
        if let Ok(seed) = std::env::var("HAMCAP_SEED") {
            cfg.seed = seed.parse().with_context(|| format!("HAMCAP_SEED={seed:?} is not an integer"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Profiles { run, samples } => commands::profiles(&run.resolve()?, samples),
        Command::Orbits(run) => commands::orbits(&run.resolve()?),
        Command::Capacity(run) => commands::capacity(&run.resolve()?),
        Command::Verify { out } => commands::verify_all(&out),
        Command::Config { preset } => {
            println!("{}", RunConfig::preset(&preset)?.to_json());
            Ok(true)
        }
        Command::Presets => {
            for name in config::PRESETS {
                println!("{name}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
