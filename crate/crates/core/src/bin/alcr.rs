use std::process::ExitCode;

fn main() -> ExitCode {
    alcr::cli::run_cli(std::env::args_os(), &mut std::io::stdout())
}
