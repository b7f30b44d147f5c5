use std::process::ExitCode;

fn main() -> ExitCode {
    spft::cli::run()
}
