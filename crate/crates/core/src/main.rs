use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let status = translator_forge::cli::main_with_args(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(status.code() as u8)
}
