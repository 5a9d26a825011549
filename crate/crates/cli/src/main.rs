use clap::Parser;

use rydex_cli::cli::Cli;
use rydex_cli::error::EXIT_USAGE;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match rydex_cli::execute(&cli.command) {
        Ok(Some(manifest)) => log::info!("manifest written to {}", manifest.display()),
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
