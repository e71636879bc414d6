use std::process::ExitCode;

fn main() -> ExitCode {
    splitsim::cli::main_with_args(std::env::args_os())
}
