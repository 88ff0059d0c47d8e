use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::init();
    ExitCode::from(bimanual::cli::run(std::env::args()) as u8)
}
