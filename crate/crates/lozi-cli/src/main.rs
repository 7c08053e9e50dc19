use std::process::ExitCode;

use clap::Parser;
use lozi_cli::cli::Cli;
use lozi_cli::Command;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd: Command = cli.command.into();
    let cfg = match cli.overrides.resolve(cmd) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match lozi_cli::run(cmd, &cfg) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                for v in &out.violations {
                    eprintln!("violation: {v}");
                }
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
