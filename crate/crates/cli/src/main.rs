mod args;
mod commands;
mod reference;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// A failed invocation: bad usage exits with 1, bad or missing data with 2.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Failure::Data(msg.into())
    }
}

impl From<snore::Error> for Failure {
    fn from(e: snore::Error) -> Self {
        match e {
            snore::Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Stats(a) => commands::stats(a),
        Command::Rank(a) => commands::rank(a),
        Command::Embed(a) => commands::embed(a),
        Command::Eval(a) => commands::eval(a),
        Command::Reproduce(a) => commands::reproduce(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.workers {
        Some(0) => Err(Failure::usage("--workers must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(Failure::usage(format!("cannot start {n} workers: {e}"))),
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
