use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use strat_ipm::scenario::{self, Scenario, EXIT_CONFIG, EXIT_IO};
use strat_ipm::Error;

/// Stratified IPM simulator and decay-rate harness.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for CSV curves and summary.txt.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides every random seed in the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run { config: PathBuf },
    /// Run a built-in preset.
    Preset { id: String },
    /// List presets with the statement each reproduces.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("STRAT_IPM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Ignored if the pool is already up; nothing else builds it first.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    let scenario = match &cli.command {
        Command::List => {
            return match scenario::list_scenarios() {
                Ok(list) => {
                    for (id, anchor) in list {
                        println!("{id:<26} {anchor}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e, EXIT_CONFIG),
            };
        }
        Command::Run { config } => scenario::parse_config(config),
        Command::Preset { id } => scenario::preset(id),
    };
    let mut scenario: Scenario = match scenario {
        Ok(s) => s,
        Err(e @ Error::Io(_)) => return fail(&e, EXIT_IO),
        Err(e) => return fail(&e, EXIT_CONFIG),
    };
    if let Some(seed) = cli.seed {
        scenario.reseed(seed);
    }
    let artifacts = match scenario::run_scenario(&scenario) {
        Ok(a) => a,
        Err(e) => return fail(&e, EXIT_CONFIG),
    };
    if let Err(e) = artifacts.write(&cli.out) {
        return fail(&e, EXIT_IO);
    }
    if !cli.quiet {
        print!("{}", artifacts.summary);
    }
    ExitCode::from(artifacts.outcome.exit_code() as u8)
}

fn fail(e: &Error, code: i32) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code as u8)
}
