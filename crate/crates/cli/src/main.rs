use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use robagg_cli::{run, Cli, CliError, CliResult, Report};

fn emit(cli: &Cli, report: &Report) -> CliResult<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    out.write_all(report.to_table().as_bytes())?;
    match &cli.csv {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| CliError::Write(format!("{}: {e}", path.display())))?;
            report.write_csv(file)?;
        }
        None => {
            out.write_all(b"\n")?;
            report.write_csv(&mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|report| emit(&cli, &report).map(|()| report.ok));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("robagg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
