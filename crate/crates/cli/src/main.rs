use std::process::ExitCode;

use clap::Parser;

use arzela_cli::{run, Cli, Exit};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ARZELA_LOG", "warn")).init();
    // Usage errors exit 1: status 2 is reserved for an unmet hypothesis.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                Exit::Error.code()
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let exit = match run(&cli) {
        Ok(exit) => exit,
        Err(e) => {
            eprintln!("error: {e}");
            Exit::Error
        }
    };
    ExitCode::from(exit.code())
}
