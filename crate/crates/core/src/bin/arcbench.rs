//! Benchmark harness: run configured solvers on a generated instance and
//! post-process trace directories into plot-ready data.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arcbench", about = "Riemannian solver benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver in a config file on one generated instance.
    Run {
        /// TOML run configuration.
        config: PathBuf,
        /// Override the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated list of seeds; each runs into its own
        /// `seed-<n>` subdirectory.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Run the seeds from --seeds on parallel threads.
        #[arg(long)]
        parallel: bool,
        /// Enable the slower diagnostics (Taylor-constant estimation).
        #[arg(long)]
        slow_checks: bool,
    },
    /// Turn a directory of trace CSVs into gradnorm-vs-{time,oraclecalls,outer} files.
    Report {
        /// Directory containing `<problem>__<solver>.csv` traces.
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            seeds,
            parallel,
            slow_checks,
        } => {
            if let Some(seeds) = seeds {
                let mut cfg = match arcopt::cli::RunConfig::load(&config) {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("config error: {e}");
                        return ExitCode::from(1);
                    }
                };
                if slow_checks {
                    cfg.slow_checks = true;
                }
                match arcopt::cli::run_seeds(&cfg, &seeds, parallel) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        eprintln!("run error: {e}");
                        ExitCode::from(2)
                    }
                }
            } else {
                ExitCode::from(arcopt::cli::run(&config, seed, slow_checks) as u8)
            }
        }
        Command::Report { dir } => match arcopt::cli::report(&dir) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("report error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
