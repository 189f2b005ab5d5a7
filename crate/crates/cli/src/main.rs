mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(Failure::usage(e.to_string().trim().to_string())),
    };
    let outcome = match cli.command {
        Command::GenCorpus(a) => commands::gen_corpus(a),
        Command::Validate(a) => commands::validate(a),
        Command::Run(a) => commands::run(a),
        Command::Report(a) => commands::report(a),
        Command::SweepK(a) => commands::sweep_k(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    let body = serde_json::json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
    eprintln!("{body}");
    ExitCode::from(f.code)
}
