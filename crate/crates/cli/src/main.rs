use clap::Parser;

use msc_cli::args::Cli;
use msc_cli::error::exit;

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot start {} threads: {e}", cli.threads);
            std::process::exit(exit::INPUT);
        }
    }
    if let Err(e) = msc_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
