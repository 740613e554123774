use clap::Parser;
use ushape_cli::args::Cli;
use ushape_cli::error::exit;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (command, flags) = Cli::parse().command.split();
    let code = match ushape_cli::run(command, &flags) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("ushape: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
