use std::process::ExitCode;

fn main() -> ExitCode {
    singular_mrl::cli::main_with_args(std::env::args_os())
}
