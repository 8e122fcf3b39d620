use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use cyclia::cli::{self, Cli};

fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes()).context("writing output")?;
    out.flush().context("flushing output")?;
    Ok(())
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match cli::run(&args) {
        Ok(text) => match emit(&text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(5)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
