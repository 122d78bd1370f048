//! `uot` — run unnormalized optimal transport experiments from JSON configs.
//!
//! Exit codes: 0 on completion (converged or not; see summary.json),
//! 2 on configuration errors, 3 on numerical divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use uot_core::runner::{self, RunConfig};
use uot_core::Error;

#[derive(Parser)]
#[command(name = "uot", version, about = "Unnormalized optimal transport solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solve described by a JSON config file.
    Solve {
        /// Path to the config (see README for the schema).
        #[arg(long)]
        config: PathBuf,
    },
    /// Print a named preset config, or run it when --out is given.
    Preset {
        /// One of exp1, exp2-balanced, exp2-unbalanced, exp3, exp4, exp5.
        #[arg(long)]
        name: String,
        /// Output directory; when present the preset is run, not just printed.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute diagnostics from a finished run directory.
    Diagnose {
        /// Directory containing config.json and the field files.
        #[arg(long)]
        run: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Divergence { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve { config } => {
            let config = RunConfig::from_file(&config)?;
            report_runs(&runner::run(&config)?);
            Ok(())
        }
        Command::Preset { name, out } => {
            let mut config = RunConfig::preset(&name)?;
            match out {
                None => {
                    println!("{}", config.to_json());
                    Ok(())
                }
                Some(dir) => {
                    config.out_dir = dir;
                    report_runs(&runner::run(&config)?);
                    Ok(())
                }
            }
        }
        Command::Diagnose { run } => {
            let summary = runner::diagnose(&run)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            Ok(())
        }
    }
}

fn report_runs(outputs: &[runner::RunOutput]) {
    for out in outputs {
        let s = &out.summary;
        let value = s
            .objective
            .or(s.uw1)
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|| "inf".into());
        println!(
            "{}: objective={value} gap={:.3e} continuity={:.3e} converged={} iterations={} ({:.1}s)",
            out.directory.display(),
            s.gap,
            s.continuity_residual,
            s.converged,
            s.iterations_run,
            s.wall_seconds
        );
    }
}
