//! Scenario files: parse one, run it and write its curves and summary.
//!
//! `cargo run --release --example scenarios -- path/to/file.toml out/`
//! runs a file; without arguments the `mean-laws` preset is used.

use std::path::PathBuf;

use strat_ipm::scenario::{emit, list_scenarios, parse_config, preset, run_scenario};

fn main() -> strat_ipm::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario = match args.next() {
        Some(path) => parse_config(&PathBuf::from(path))?,
        None => preset("mean-laws")?,
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/scenarios".into()));

    for (id, anchor) in list_scenarios()? {
        println!("{id:<26} {anchor}");
    }
    println!("\n{}", emit(&scenario)?);

    let artifacts = run_scenario(&scenario)?;
    artifacts.write(&out)?;
    print!("{}", artifacts.summary);
    println!("exit code {}", artifacts.outcome.exit_code());
    Ok(())
}
