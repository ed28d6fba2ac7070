use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = rowexit::cli::Cli::parse();
    let code = rowexit::cli::run(cli, &mut std::io::stdout().lock());
    ExitCode::from(code)
}
