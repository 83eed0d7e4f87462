//! `ctl-sim`: configuration-driven front end to the transmission-line
//! simulator. Every run writes CSV data plus a JSON sidecar with the
//! resolved SI configuration and the runtime invariant checks.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod report;
mod units;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};
use ctl_sim::Exec;

use crate::commands::Context;
use crate::config::RunConfig;
use crate::report::{write_file, Sidecar};

#[derive(Parser)]
#[command(name = "ctl-sim", version, about = "Hybrid left/right-handed transmission line simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for the randomized cross-check points.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Integration tolerance for symplectic propagation.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true, env = "CTL_SIM_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Bare and corrected dispersion for j = 1..N/2.
    Dispersion,
    /// Solve C_r for degeneracy at each requested j.
    Match,
    /// List resonances among a set of modes under the drive.
    Classify,
    /// Gaussian occupation dynamics of a mode pair.
    Evolve,
    /// Second-order correlation scan.
    G2,
    /// Hong–Ou–Mandel dip of a degenerate pair.
    Hom,
    /// Two-bath amplifier power trace.
    Power,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Match => "match",
            Command::Classify => "classify",
            Command::Evolve => "evolve",
            Command::G2 => "g2",
            Command::Hom => "hom",
            Command::Power => "power",
        }
    }
}

fn exec_for(threads: Option<usize>) -> Result<Exec> {
    match threads {
        Some(0) => anyhow::bail!("thread count must be ≥ 1"),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring threads")?;
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Exec::Sequential),
        None => Ok(Exec::default()),
    }
}

/// Ok(true) when every invariant check passed.
fn run(cli: &Cli) -> Result<bool> {
    let name = cli.command.name();
    anyhow::ensure!(cli.tol > 0.0 && cli.tol.is_finite(), "--tol must be a positive number");
    let path = cli.config.as_ref().context("--config PATH is required")?;
    let config = RunConfig::load(path)?;
    let ctx = Context { config: &config, seed: cli.seed, tol: cli.tol, exec: exec_for(cli.threads)? };
    let outcome = match cli.command {
        Command::Dispersion => commands::dispersion(&ctx),
        Command::Match => commands::matching(&ctx),
        Command::Classify => commands::classify(&ctx),
        Command::Evolve => commands::evolve(&ctx),
        Command::G2 => commands::g2(&ctx),
        Command::Hom => commands::hom(&ctx),
        Command::Power => commands::power(&ctx),
    }
    .with_context(|| format!("{name} failed"))?;

    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let mut outputs = Vec::new();
    for (file, contents) in &outcome.files {
        write_file(&cli.out.join(file), contents)?;
        outputs.push(file.clone());
    }
    let sidecar_name = format!("{name}.json");
    outputs.push(sidecar_name.clone());
    let passed = outcome.checks.all_passed();
    let sidecar = Sidecar {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        seed: cli.seed,
        tol: cli.tol,
        config: &config,
        outputs: &outputs,
        checks: &outcome.checks,
        passed,
        report: &outcome.report,
    };
    write_file(&cli.out.join(&sidecar_name), &sidecar.render()?)?;
    for c in outcome.checks.failures() {
        eprintln!("invariant check failed: {} = {:e} (limit {:e})", c.name, c.value, c.limit);
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
