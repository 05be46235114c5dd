#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod controller;

use commands::{Ctx, Failure};
use config::RunConfig;

/// Robust μ-synthesis and verification for rigid-link robots.
#[derive(Parser)]
#[command(name = "mucontrol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interval bounds, uncertain plant and open-loop magnitudes.
    Plant(Common),
    /// μ-synthesis (D-K iteration or fixed-structure tuning).
    Synth(Common),
    /// Vertex stability and Monte-Carlo sensitivity envelopes.
    Verify(Common),
    /// Nonlinear closed-loop time response.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Re-run at dt/2 and report the final-state difference.
        #[arg(long)]
        check_dt: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long, value_parser = ["paper2r"])]
    preset: Option<String>,
    /// Output directory (default: config `output`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Controller file; defaults to the config's `[controller]` section.
    #[arg(long)]
    controller: Option<PathBuf>,
}

impl Common {
    fn context(&self) -> Result<Ctx, Failure> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::load(p)?,
            (None, Some(name)) => RunConfig::preset(name)?,
            (None, None) => return Err(Failure::Validation("one of --config or --preset is required".into())),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let out = self.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
        Ctx::new(cfg, out)
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, Failure> {
    match cli.command {
        Command::Plant(c) => commands::cmd_plant(&c.context()?),
        Command::Synth(c) => commands::cmd_synth(&c.context()?),
        Command::Verify(c) => commands::cmd_verify(&c.context()?, c.controller.as_deref()),
        Command::Simulate { common, check_dt } => {
            commands::cmd_simulate(&common.context()?, common.controller.as_deref(), check_dt)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
