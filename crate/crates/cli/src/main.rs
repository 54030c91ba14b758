use std::process::ExitCode;

use adchart::Cli;
use clap::Parser;

fn write(path: &std::path::Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = adchart::run(&cli);
    let json = out.report.to_json();
    let written = match &cli.options.out {
        Some(p) => write(p, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
    .and_then(|_| match (&cli.options.csv, &out.csv) {
        (Some(p), Some(t)) => write(p, t),
        _ => Ok(()),
    });
    if let Err(e) = written {
        eprintln!("adchart: {e}");
        return ExitCode::from(1);
    }
    if let Some(e) = &out.report.error {
        eprintln!("adchart: {}", e.message);
    }
    ExitCode::from(out.exit_code() as u8)
}
