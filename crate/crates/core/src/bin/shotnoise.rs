use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(shotnoise::cli::run(std::env::args_os()))
}
