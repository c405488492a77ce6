use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use locpovm::scenario::{self, LoadOptions, GENERATOR_KINDS, VERSION};

#[derive(Parser)]
#[command(name = "locpovm", about = "Runs localization and no-signaling checks from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        file: PathBuf,
        /// Write the full JSON report here (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a one-row-per-scenario CSV summary here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, env = "LOCPOVM_WORKERS")]
        workers: Option<usize>,
        /// Default tolerance for scenarios that do not set one.
        #[arg(long)]
        tol: Option<f64>,
        /// Master seed, overriding the file's.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a seeded random object as JSON.
    Gen {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(GENERATOR_KINDS))]
        kind: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the version
    Version,
}

const EXIT_INPUT: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("locpovm {VERSION}");
            ExitCode::SUCCESS
        }
        Command::Gen { kind, dim, seed } => match scenario::generate_instance(&kind, dim, seed) {
            Ok(obj) => {
                println!("{}", serde_json::to_string(&obj).expect("objects serialize"));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INPUT)
            }
        },
        Command::Run {
            file,
            out,
            csv,
            workers,
            tol,
            seed,
        } => {
            let text = match std::fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", file.display());
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            let set = match scenario::parse_scenarios(&text, LoadOptions { seed, tol }) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("input error: {e}");
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            let report = match scenario::run_scenarios(&set, workers) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("input error: {e}");
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            for r in &report.reports {
                eprintln!("{:<5} {:<40} max_residual={:e}", r.verdict, r.name, r.max_residual());
            }
            eprintln!(
                "{} pass, {} fail, {} info",
                report.summary.pass, report.summary.fail, report.summary.info
            );
            let written = match &out {
                Some(path) => scenario::emit_json(&report, path),
                None => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                    Ok(())
                }
            }
            .and_then(|_| match &csv {
                Some(path) => scenario::emit_csv(&report, path),
                None => Ok(()),
            });
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
            ExitCode::from(report.exit_code() as u8)
        }
    }
}
