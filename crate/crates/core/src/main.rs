use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = multiport_witness::cli::Cli::parse();
    multiport_witness::cli::run(cli)
}
