use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(obtuse_cli::run(std::env::args_os()))
}
