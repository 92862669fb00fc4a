//! Command-line front end for the sonification pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::Outputs;
use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

/// Environment variable that replaces the configured output directory.
pub const OUT_ENV: &str = "SONIQ_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "soniq",
    version,
    about = "Sonify multichannel recordings with simulated qubits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render every channel as one voice of a polyphonic WAV.
    Sonify(Common),
    /// Rolling moments of one channel through amplitude-encoded states.
    Qpam {
        #[command(flatten)]
        common: Common,
        /// Also render the moment series as audio.
        #[arg(long)]
        sonify: bool,
        /// Fail unless every moment matches the direct formula within 1e-9.
        #[arg(long)]
        verify: bool,
    },
    /// Drive a transverse-field Ising chain with the recording.
    Ising {
        #[command(flatten)]
        common: Common,
        /// Add exact-propagator columns (at most 6 spins).
        #[arg(long)]
        exact: bool,
    },
    /// Every stage, ending with the FM-modulated rendering.
    Full {
        #[command(flatten)]
        common: Common,
        /// Skip the modulation; the final WAV equals the plain rendering.
        #[arg(long)]
        no_fm: bool,
    },
    /// Write the deterministic synthetic recording.
    Synth {
        /// Destination CSV (default `<out_dir>/synthetic.csv`).
        output: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Input CSV, one column per channel.
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub print_config: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl ConfigArgs {
    /// Defaults, then the file, then the environment, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.merge_file(path)?;
        }
        if let Some(dir) = std::env::var_os(OUT_ENV).filter(|d| !d.is_empty()) {
            cfg.out_dir = dir.to_string_lossy().into_owned();
        }
        self.overrides.apply(&mut cfg).map_err(CliError::Usage)?;
        Ok(cfg)
    }
}

fn require_input(input: &Option<PathBuf>) -> Result<&Path, CliError> {
    input
        .as_deref()
        .ok_or_else(|| CliError::usage("missing input CSV"))
}

/// Runs one invocation; output paths go to stdout.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let (common, config) = match &cli.command {
        Command::Sonify(c)
        | Command::Qpam { common: c, .. }
        | Command::Ising { common: c, .. }
        | Command::Full { common: c, .. } => (Some(c), &c.config),
        Command::Synth { config, .. } => (None, config),
    };
    let cfg = config.resolve()?;
    if config.print_config {
        print!("{}", cfg.render());
        return Ok(());
    }

    if let Command::Synth { output, .. } = &cli.command {
        let path = output
            .clone()
            .unwrap_or_else(|| Path::new(&cfg.out_dir).join("synthetic.csv"));
        commands::synth(&cfg, &path)?;
        println!("{}", path.display());
        return Ok(());
    }

    let input = require_input(&common.expect("non-synth command").input)?;
    let set = commands::load_input(input, &cfg)?;
    let mut out = Outputs::create(&cfg.out_dir)?;
    match &cli.command {
        Command::Sonify(_) => {
            commands::sonify(&set, &cfg, &mut out)?;
        }
        Command::Qpam { sonify, verify, .. } => {
            commands::qpam(&set, &cfg, &mut out, *sonify, *verify)?;
        }
        Command::Ising { exact, .. } => {
            commands::ising(&set, &cfg, &mut out, *exact)?;
        }
        Command::Full { no_fm, .. } => commands::full(&set, &cfg, &mut out, *no_fm)?,
        Command::Synth { .. } => unreachable!(),
    }
    for path in out.written() {
        println!("{}", path.display());
    }
    Ok(())
}
