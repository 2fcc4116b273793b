use std::process::ExitCode;

fn main() -> ExitCode {
    mdsmod::cli::main()
}
