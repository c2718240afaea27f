use clap::Parser;

use dsiht_cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dsiht_cli::run(&cli) {
        eprintln!("error: {}", e);
        std::process::exit(e.exit_code());
    }
}
