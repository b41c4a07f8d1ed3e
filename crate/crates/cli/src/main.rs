use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let config = match equimarginal_cli::parse_args(std::env::args_os().skip(1)) {
        Ok(config) => config,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = equimarginal_cli::run(&config);
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.code)
}
