use clap::Parser;

fn main() {
    let cli = nncalc_cli::Cli::parse();
    if let Err(e) = nncalc_cli::run(&cli) {
        eprintln!("nncalc: {e}");
        std::process::exit(e.exit_code());
    }
}
