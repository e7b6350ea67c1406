use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use stiefel_fourier_cli::args::Cli;
use stiefel_fourier_cli::run;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = run(&cli, &mut out);
    let _ = out.flush();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("stiefel-fourier: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
