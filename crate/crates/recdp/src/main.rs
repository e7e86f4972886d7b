use std::process::ExitCode;

fn main() -> ExitCode {
    recdp::cli::run(std::env::args_os())
}
