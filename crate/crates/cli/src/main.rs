use std::panic;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code =
        panic::catch_unwind(|| flight_cli::run(std::env::args_os())).unwrap_or(flight_cli::ExitStatus::Internal as i32);
    ExitCode::from(code as u8)
}
