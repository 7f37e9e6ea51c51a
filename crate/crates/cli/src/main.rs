use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use mlapd_cli::{cmd_gen, cmd_run, cmd_trace, cmd_verify, write_csv, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args).and_then(|(rows, failed)| {
            match &args.out {
                Some(dir) => {
                    let failures = rows.iter().filter(|r| r.failed()).count();
                    println!(
                        "{} cells, {} failed; results in {}",
                        rows.len(),
                        failures,
                        dir.join("results.csv").display()
                    );
                }
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
            Ok(!failed)
        }),
        Command::Gen(args) => cmd_gen(args).map(|text| {
            print!("{text}");
            true
        }),
        Command::Trace(args) => cmd_trace(args).map(|text| {
            print!("{text}");
            true
        }),
        Command::Verify(args) => cmd_verify(args).map(|(text, ok)| {
            print!("{text}");
            ok
        }),
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
