use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match effres_cli::Cli::try_parse_from(std::env::args_os()) {
        Ok(cli) => cli,
        // help and version print cleanly; real argument errors exit nonzero
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match effres_cli::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
