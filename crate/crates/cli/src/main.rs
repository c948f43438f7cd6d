use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use polybias_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (report, code) = run(&cli);
    match serde_json::to_string_pretty(&report) {
        Ok(text) => println!("{text}"),
        Err(e) => {
            eprintln!("failed to serialize report: {e}");
            return ExitCode::from(1);
        }
    }
    if let Some(err) = &report.error {
        eprintln!("polybias: {}", err.message);
    }
    ExitCode::from(code)
}
