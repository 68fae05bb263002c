use clap::Parser;

fn main() {
    let cli = rydpol::cli::Cli::parse();
    if let Err(e) = rydpol::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
