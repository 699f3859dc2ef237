use clap::Parser;
use feedfx_cli::cli::{run, CliArgs};

fn main() {
    let args = CliArgs::parse();
    if let Err(err) = run(args) {
        eprintln!("{}", err.to_json());
        std::process::exit(err.exit_code());
    }
}
