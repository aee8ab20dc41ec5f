use std::process::ExitCode;

use clap::Parser;
use qar_cli::args::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let name = cli.command.name();
    match qar_cli::run(cli) {
        Ok(()) => ExitCode::from(qar_cli::error::EXIT_OK),
        Err(e) if e.is_broken_pipe() => ExitCode::from(qar_cli::error::EXIT_OK),
        Err(e) => {
            log::error!("{e}");
            if e.exit_code() == qar_cli::error::EXIT_CONFIG {
                eprintln!("{}", qar_cli::usage(name));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
