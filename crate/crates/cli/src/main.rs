use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ANOMALE_LOG", "info")).init();
    let cli = anomale_cli::Cli::parse();
    if let Err(e) = anomale_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
