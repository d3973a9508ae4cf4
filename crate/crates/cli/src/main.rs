mod args;
mod commands;
mod failure;
mod manifest;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KGJOINT_LOG", "info"))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Stats(a) => commands::stats(a),
        Command::MakeSynthetic(a) => commands::make_synthetic_data(a),
        Command::TrainStructural(a) => commands::train_structural(a),
        Command::TrainJoint(a) => commands::train_joint(a),
        Command::TrainAll(a) => commands::train_all(a),
        Command::Eval(a) => commands::eval(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
