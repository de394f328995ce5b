use clap::Parser;

fn main() {
    let cli = aaon_cli::Cli::parse();
    if let Err(e) = aaon_cli::run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
