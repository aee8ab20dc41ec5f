//! Command-line front end: configuration, commands and data-file output.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::io::Write;

use clap::CommandFactory;
use log::debug;

use crate::args::Cli;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "QAR_WORKERS";

fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot start {n} workers: {e}")))
}

/// Data goes to `--out` when given, otherwise to stdout for data commands.
/// The summary goes to stdout unless stdout already carries the table.
pub fn run(cli: Cli) -> Result<()> {
    configure_workers()?;
    let (kind, overrides) = cli.command.overrides()?;
    let cfg = RunConfig::resolve(kind, &overrides)?;
    debug!("resolved configuration: {cfg:?}");
    let report = commands::execute(kind, &cfg)?;
    let stdout = std::io::stdout();
    match &cfg.out {
        Some(path) => {
            output::write_files(path, kind.name(), &report, &cfg)?;
            report.write_summary(stdout.lock())?;
        }
        None if kind.emits_data() => {
            if let Some(table) = &report.table {
                table.write(stdout.lock())?;
            }
            report.write_summary(std::io::stderr().lock())?;
        }
        None => report.write_summary(stdout.lock())?,
    }
    stdout.lock().flush()?;
    Ok(())
}

/// Usage line of a subcommand, shown after configuration errors.
pub fn usage(subcommand: &str) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    match cmd.find_subcommand_mut(subcommand) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}
