//! The `msc` command-line tool: clustering of delimiter-separated data,
//! PGM image segmentation, synthetic data generation, parameter sweeps and
//! a self-verification harness.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;
pub mod pnm;
pub mod table;
pub mod verify;

use args::{Cli, Command};
use error::{CliError, CliResult};

pub fn run(cli: &Cli) -> CliResult<()> {
    let precision = cli.precision;
    match &cli.command {
        Command::Cluster(a) => commands::cmd_cluster(a, precision),
        Command::Segment(a) => commands::cmd_segment(a, precision),
        Command::GenArcs(a) => commands::cmd_gen_arcs(a, precision),
        Command::Sweep(a) => commands::cmd_sweep(a, precision),
        Command::Verify(a) => {
            let reports = verify::run_all(&verify::VerifyOptions {
                seed: a.seed,
                cases: a.cases,
                inject_fault: a.inject_fault,
            });
            print!("{}", verify::format_reports(&reports));
            let failed: Vec<&String> = reports.iter().flat_map(|r| &r.failures).collect();
            for f in &failed {
                eprintln!("failed {f}");
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Verification(failed.len()))
            }
        }
    }
}
