//! Command-line pipeline over the `ecomal` library: ingest an OSV snapshot,
//! build the series, select and fit ARDL models, run diagnostics and write
//! every table and plot series as CSV or JSON.

pub mod args;
pub mod commands;
pub mod config;
pub mod exit;
mod output;
pub mod simulate;

use anyhow::Result;

use args::Command;

/// Runs one parsed subcommand.
pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => {
            let cfg = a.resolve()?;
            commands::check_output_dir(&cfg)?;
            commands::cmd_ingest(&cfg).map(drop)
        }
        Command::Build(a) => commands::cmd_build(&a.resolve()?).map(drop),
        Command::Select(a) => commands::cmd_select(&a.resolve()?).map(drop),
        Command::Fit(a) => commands::cmd_fit(&a.config.resolve()?, a.orders).map(drop),
        Command::Diagnose(a) => commands::cmd_diagnose(&a.config.resolve()?, a.orders).map(drop),
        Command::Report(a) => commands::cmd_report(&a.resolve()?),
        Command::Pipeline(a) => {
            let cfg = a.resolve()?;
            commands::check_output_dir(&cfg)?;
            commands::cmd_pipeline(&cfg).map(drop)
        }
        Command::Simulate(a) => {
            let cfg = a.config.resolve()?;
            let spec = simulate::SimulationSpec {
                seed: cfg.seed,
                start: cfg.window_start,
                end: cfg.window_end,
                daily_rate: a.daily_rate,
            };
            let stats = simulate::simulate_snapshot(&spec, &a.dest)?;
            println!(
                "wrote {} records ({} malware, {} out of scope) to {}",
                stats.records,
                stats.malware,
                stats.out_of_scope,
                a.dest.display()
            );
            Ok(())
        }
    }
}
