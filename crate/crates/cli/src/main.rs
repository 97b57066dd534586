//! `ael`: periodogram, Whittle fits, empirical likelihood regions and
//! coverage experiments for ARMA series.

mod commands;
mod error;
mod output;
mod series;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CoverageArgs, FitArgs, PeriodogramArgs, RegionArgs, SimulateArgs};

#[derive(Debug, Parser)]
#[command(name = "ael", version, about = "Adjusted empirical likelihood inference for ARMA time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Periodogram ordinates at the retained Fourier frequencies.
    Periodogram(PeriodogramArgs),
    /// Whittle maximum likelihood fit.
    Fit(FitArgs),
    /// Confidence region on a parameter grid.
    Region(RegionArgs),
    /// Monte Carlo coverage experiment from a TOML plan.
    Coverage(CoverageArgs),
    /// Simulate an ARMA series.
    Simulate(SimulateArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Periodogram(a) => commands::periodogram(a),
        Command::Fit(a) => commands::fit(a),
        Command::Region(a) => commands::region(a),
        Command::Coverage(a) => commands::coverage(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
