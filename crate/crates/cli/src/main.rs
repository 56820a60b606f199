mod args;
mod io;
mod manifest;
mod stages;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command};

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let m = stages::execute(&cli.command)?;
    let out = cli.command.output().out.display();
    match &cli.command {
        Command::Rerun(_) => println!("{out}: reproduced {} output files bit-for-bit", m.outputs.len()),
        _ => println!("{out}: wrote {} files ({} stage)", m.outputs.len() + 1, m.stage),
    }
    Ok(())
}
