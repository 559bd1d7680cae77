use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dfo_bench::{format_table, load_delta0_overrides, run_matrix, BenchConfig, Method, Result};

#[derive(Parser)]
#[command(name = "dfo-bench", version, about = "Benchmark the trust-region solver on the test suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a problem × method × seed matrix.
    Run {
        /// Comma-separated problem names; omit for the whole suite.
        #[arg(long, value_delimiter = ',')]
        problems: Vec<String>,
        /// Comma-separated methods out of V1, V2, V3, V4, NM.
        #[arg(long, value_delimiter = ',', default_value = "V1,V2,V3,V4,NM")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        /// Initial radius for problems without an override.
        #[arg(long, default_value_t = 1.0)]
        delta0: f64,
        /// JSON object mapping problem names to initial radii.
        #[arg(long)]
        delta0_file: Option<PathBuf>,
        /// Directory for summary.json and histories/*.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the problem manifest as JSON.
    Manifest,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            problems,
            methods,
            budget,
            tolerance,
            seeds,
            delta0,
            delta0_file,
            out,
        } => {
            let methods = methods
                .iter()
                .map(|m| m.parse())
                .collect::<Result<Vec<Method>>>()?;
            let overrides = match &delta0_file {
                Some(path) => load_delta0_overrides(path)?,
                None => Default::default(),
            };
            let cfg = BenchConfig {
                problems,
                methods,
                budget,
                tolerance,
                default_delta0: delta0,
                delta0: overrides,
                seeds,
                output_dir: out,
            };
            let summary = run_matrix(&cfg)?;
            print!("{}", format_table(&summary));
        }
        Command::Manifest => {
            let manifest = dfo_core::testbed::manifest();
            println!(
                "{}",
                serde_json::to_string_pretty(&manifest).expect("manifest serialises")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
