//! `hitchin`: configuration-driven runs of the hitchin-core computations.
//!
//! Exit codes: 0 success, 1 a mathematical relation failed, 2 bad input.

mod commands;
mod config;
mod error;
mod selftest;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hitchin_core::Backend;
use num_rational::BigRational;

use crate::commands::{Context, ReparamDirection};
use crate::config::BackendName;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "hitchin", version, about = "Invariants, coordinates and degeneration bounds for Hitchin representations")]
struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Arithmetic backend; overrides the config
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendName>,
    /// Output file; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks; overrides the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the closed-leaf equalities and inequalities of the configured invariants
    Invariants,
    /// Map invariants to coordinates or back
    Reparam {
        #[arg(long, value_enum)]
        direction: ReparamDirection,
    },
    /// K, L and the entropy upper bound
    Kbound,
    /// K, L and the entropy bound along a ray of internal parameters
    EntropyScan,
    /// Encode a closed curve of the Fuchsian surface
    PsiTrace {
        /// Word in a, b, s, t (capitals are inverses); overrides tracer.word
        #[arg(long)]
        word: Option<String>,
    },
    /// Write a config holding the invariants of the configured Fuchsian surface
    FuchsianGen,
    /// Run the built-in property bank
    Selftest {
        #[arg(long, value_enum, hide = true)]
        inject: Option<selftest::Fault>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let loaded = cli.config.as_deref().map(config::load).transpose()?;
    let from_config = loaded.as_ref().map(|l| &l.config);
    let backend: Backend = cli
        .backend
        .or_else(|| from_config.and_then(|c| c.backend))
        .unwrap_or(BackendName::Float64)
        .into();
    let seed = cli.seed.or_else(|| from_config.and_then(|c| c.seed)).unwrap_or(0);
    let out = cli
        .out
        .or_else(|| from_config.and_then(|c| c.output.as_ref()).and_then(|o| o.path.clone()));
    let ctx = Context { loaded, seed, out };
    match cli.command {
        Command::Invariants => match backend {
            Backend::Exact => commands::invariants::<BigRational>(&ctx),
            Backend::Float64 => commands::invariants::<f64>(&ctx),
        },
        Command::Reparam { direction } => match backend {
            Backend::Exact => commands::reparam::<BigRational>(&ctx, direction),
            Backend::Float64 => commands::reparam::<f64>(&ctx, direction),
        },
        Command::Kbound => commands::kbound(&ctx),
        Command::EntropyScan => commands::entropy_scan(&ctx),
        Command::PsiTrace { word } => commands::psi_trace(&ctx, word.as_deref()),
        Command::FuchsianGen => commands::fuchsian_gen(&ctx),
        Command::Selftest { inject } => {
            if selftest::run(seed, inject) {
                Ok(())
            } else {
                Err(CliError::Relation("selftest failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
