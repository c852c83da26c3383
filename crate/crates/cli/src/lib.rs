// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: simulation, fitting, oracle comparison,
//! truncation convergence and the superfluorescence test.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use qwfluor::Error;

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Rejected input: configuration, parameters, data files.
pub const EXIT_VALIDATION: i32 = 2;
/// A numerical stage failed on valid input.
pub const EXIT_NUMERICAL: i32 = 3;
/// The requested Hilbert space exceeds the oracle's size guard.
pub const EXIT_SCALE_GUARD: i32 = 4;
/// Reading or writing a file failed.
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "qwfluor", version, about = "Resonance fluorescence of driven Kerr exciton modes")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration entry, e.g. `--set model.rabi=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory; same as `--set output.dir=...`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Output file name; same as `--set output.file=...`.
    #[arg(short, long, global = true)]
    pub out: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Internal, absorption and output spectra on one grid.
    Simulate,
    /// Fit the forward model to a spectrum file.
    Fit {
        /// Spectrum table; same as `--set input.data=...`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Superfluorescence test over fit reports at different laser powers.
    SfTest {
        /// At least two fit reports.
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
    },
    /// Few-mode master equation versus the collective model.
    Oracle,
    /// Fock-space truncation study.
    Convergence,
}

/// Error tagged with the pipeline stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct CliError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match &self.source {
            Error::ScaleGuard { .. } => EXIT_SCALE_GUARD,
            Error::Io(_) => EXIT_IO,
            e if e.is_validation() => EXIT_VALIDATION,
            _ => EXIT_NUMERICAL,
        }
    }
}

pub(crate) trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for qwfluor::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError { stage, source })
    }
}

/// Runs one command and returns the lines to print on success.
pub fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    let mut overrides = cli.overrides.clone();
    if let Some(dir) = &cli.out_dir {
        overrides.push(format!("output.dir={}", toml_string(&dir.to_string_lossy())));
    }
    if let Some(file) = &cli.out {
        overrides.push(format!("output.file={}", toml_string(file)));
    }
    if let Command::Fit { data: Some(d) } = &cli.command {
        overrides.push(format!("input.data={}", toml_string(&d.to_string_lossy())));
    }
    let config = config::RunConfig::load(cli.config.as_deref(), &overrides).stage("config")?;
    match &cli.command {
        Command::Simulate => commands::simulate(&config),
        Command::Fit { .. } => commands::fit(&config),
        Command::SfTest { reports } => commands::sf_test(&config, reports),
        Command::Oracle => commands::oracle(&config),
        Command::Convergence => commands::convergence(&config),
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}
