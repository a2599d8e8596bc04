mod cli;
mod commands;
mod config;
mod data;

use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::Parser;

use cli::Cli;
use commands::{Session, VerificationFailed};
use config::{pick, FileConfig};

fn setup(cli: &Cli) -> Result<Session> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(file.threads);
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the worker pool")?;
    }
    Ok(Session { seed: pick(cli.seed, &file.seed, 0), file })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = setup(&cli).and_then(|ctx| commands::run(&cli.command, &ctx));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) if e.is::<VerificationFailed>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
