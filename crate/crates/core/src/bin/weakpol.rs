use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use weakpol::cli::{run, Args, CliError, RunConfig};

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::from_args(args).and_then(|cfg| {
        let output = run(&cfg)?;
        match &cfg.out {
            Some(path) => fs::write(path, &output.artifact)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
            None => std::io::stdout()
                .write_all(output.artifact.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))?,
        }
        Ok(output.exit_code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("weakpol: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
