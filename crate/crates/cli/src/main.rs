use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(qparch::run_from_args(std::env::args_os()))
}
