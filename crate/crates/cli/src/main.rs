use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(khintchine_lab::main_with(std::env::args_os()))
}
