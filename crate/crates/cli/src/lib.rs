//! Command-line front end for the `fdcr` simulator.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod selftest;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::commands::{cmd_compare, cmd_dsa, cmd_run, cmd_sweep, Outputs};
use crate::config::{FlagOverrides, Settings};
use crate::error::CliError;
use crate::manifest::{
    differing_outputs, digests, read_manifest, write_bundle, CommandName, Manifest,
};

#[derive(Debug, Parser)]
#[command(
    name = "fdcr",
    version,
    about = "Full-duplex cognitive radio simulator"
)]
pub struct Cli {
    /// TOML configuration file; defaults apply to anything left out.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding [sim] seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Slots per scenario, overriding [sim] n_slots.
    #[arg(long, global = true)]
    pub slots: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Also write the per-slot trace (run only).
    #[arg(long, global = true)]
    pub trace: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario.
    Run,
    /// Power-throughput curves for each configured chi_sq.
    Sweep,
    /// LAT against LBT across powers and sensing fractions.
    Compare,
    /// Multi-SU contention, half- against full-duplex.
    Dsa,
    /// Check the analytic model against Monte Carlo.
    Selftest,
    /// Re-run a recorded bundle and verify its outputs.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn load_settings(cli: &Cli) -> Result<Settings, CliError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => String::new(),
    };
    config::load(
        &text,
        std::env::vars(),
        FlagOverrides {
            seed: cli.seed,
            slots: cli.slots,
        },
    )
}

fn execute(command: CommandName, settings: &Settings, trace: bool) -> Result<Outputs, CliError> {
    match command {
        CommandName::Run => cmd_run(settings, trace),
        CommandName::Sweep => cmd_sweep(settings),
        CommandName::Compare => cmd_compare(settings),
        CommandName::Dsa => cmd_dsa(settings),
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

struct Bundle<'a> {
    command: CommandName,
    settings: &'a Settings,
    trace: bool,
    config_path: Option<String>,
    out: &'a Path,
    threads: usize,
}

fn produce(b: Bundle<'_>) -> Result<(Outputs, Manifest), CliError> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let outputs = with_threads(b.threads, || execute(b.command, b.settings, b.trace))??;
    let manifest = Manifest {
        tool: "fdcr".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: b.command,
        trace: b.trace,
        config_path: b.config_path,
        output_dir: b.out.display().to_string(),
        seed: b.settings.scenario.seed,
        threads: if b.threads == 0 {
            rayon::current_num_threads()
        } else {
            b.threads
        },
        config: b.settings.file.clone(),
        outputs: digests(&outputs),
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
    };
    write_bundle(b.out, &outputs, &manifest)?;
    Ok((outputs, manifest))
}

/// Run the parsed command line; returns the lines to print on success.
pub fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    let command = match &cli.command {
        Command::Run => CommandName::Run,
        Command::Sweep => CommandName::Sweep,
        Command::Compare => CommandName::Compare,
        Command::Dsa => CommandName::Dsa,
        Command::Selftest => {
            let checks = with_threads(cli.threads, selftest::run_selftest)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            let lines: Vec<String> = checks.iter().map(|c| c.line()).collect();
            if failed > 0 {
                for l in &lines {
                    eprintln!("{l}");
                }
                return Err(CliError::SelftestFailed(failed));
            }
            return Ok(lines);
        }
        Command::Replay { manifest } => return replay(manifest, &cli.out, cli.threads),
    };
    if cli.trace && command != CommandName::Run {
        return Err(CliError::Config("--trace only applies to `run`".into()));
    }
    let settings = load_settings(cli)?;
    let (outputs, _) = produce(Bundle {
        command,
        settings: &settings,
        trace: cli.trace,
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        out: &cli.out,
        threads: cli.threads,
    })?;
    let mut lines = outputs.report;
    lines.push(format!(
        "wrote {} file(s) to {}",
        outputs.files.len() + 1,
        cli.out.display()
    ));
    Ok(lines)
}

/// Re-run the command recorded in a manifest into `out` and compare digests.
pub fn replay(manifest_path: &Path, out: &Path, threads: usize) -> Result<Vec<String>, CliError> {
    let recorded = read_manifest(manifest_path)?;
    let settings = recorded.config.resolve(FlagOverrides::default())?;
    let (_, fresh) = produce(Bundle {
        command: recorded.command,
        settings: &settings,
        trace: recorded.trace,
        config_path: recorded.config_path.clone(),
        out,
        threads,
    })?;
    let diff = differing_outputs(&recorded.outputs, &fresh.outputs);
    if !diff.is_empty() {
        return Err(CliError::ReplayMismatch(diff.join(", ")));
    }
    Ok(vec![format!(
        "replayed {} output(s) into {}, all identical",
        fresh.outputs.len(),
        out.display()
    )])
}
