//! Command-line front end: `solve`, `verify` and `bench`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

pub mod args;
pub mod input;
pub mod output;

use equimarginal::bench::{run_bench, BenchError};
use equimarginal::oracles::{cross_validate, Method, OracleSettings, GRID_MAX_SIZE};
use equimarginal::{solve, ProblemInstance};

pub use args::{parse_args, CliConfig, Command, Format, OracleChoice};
pub use input::{parse_instance_text, read_instance_csv, InputError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// What a command printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn error(code: u8, message: impl std::fmt::Display) -> Self {
        Self { code, stdout: String::new(), stderr: format!("error: {message}\n") }
    }
}

fn load(input: &args::InputArgs) -> Result<ProblemInstance, InputError> {
    match (&input.coefficients, &input.input) {
        (Some(list), _) => Ok(ProblemInstance::new(list.0.clone())?),
        (None, Some(path)) => read_instance_csv(path),
        (None, None) => Err(InputError::Empty),
    }
}

fn selected_methods(choices: &[OracleChoice], n: usize) -> Vec<Method> {
    let mut methods = Vec::new();
    for choice in choices {
        match choice {
            OracleChoice::All => {
                methods.extend([Method::LambdaBisection, Method::ProjectedGradient]);
                if n <= GRID_MAX_SIZE {
                    methods.push(Method::GridSearch);
                }
            }
            OracleChoice::Bisection => methods.push(Method::LambdaBisection),
            OracleChoice::Gradient => methods.push(Method::ProjectedGradient),
            OracleChoice::Grid => methods.push(Method::GridSearch),
        }
    }
    methods.sort();
    methods.dedup();
    methods
}

pub fn run_solve(cmd: &args::SolveArgs) -> Outcome {
    let p = match load(&cmd.input) {
        Ok(p) => p,
        Err(e) => return Outcome::error(EXIT_USAGE, e),
    };
    match solve(&p) {
        Ok(r) => Outcome::ok(output::emit_solution(&p, &r, cmd.format)),
        Err(e) => Outcome::error(EXIT_USAGE, e),
    }
}

pub fn run_verify(cmd: &args::VerifyArgs) -> Outcome {
    let p = match load(&cmd.input) {
        Ok(p) => p,
        Err(e) => return Outcome::error(EXIT_USAGE, e),
    };
    let methods = selected_methods(&cmd.oracle, p.len());
    if methods.is_empty() {
        return Outcome::error(
            EXIT_USAGE,
            format!("no oracle applies to an instance of size {}", p.len()),
        );
    }
    let settings = OracleSettings {
        grid_resolution: cmd.resolution,
        ..OracleSettings::default()
    };
    match cross_validate(&p, &methods, cmd.tol, &settings) {
        Ok(report) => Outcome {
            code: if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED },
            stdout: output::emit_verification(&p, &report, cmd.format),
            stderr: String::new(),
        },
        Err(e) => Outcome::error(EXIT_USAGE, e),
    }
}

pub fn run_bench_command(cmd: &args::BenchArgs) -> Outcome {
    let (Ok(n), Ok(reps)) = (usize::try_from(cmd.n), usize::try_from(cmd.reps)) else {
        return Outcome::error(EXIT_USAGE, "n or reps too large for this platform");
    };
    match run_bench(n, reps, cmd.seed) {
        Ok(report) => Outcome::ok(output::emit_bench(&report, cmd.format)),
        Err(e @ BenchError::KktFailure { .. }) => Outcome::error(EXIT_VERIFY_FAILED, e),
        Err(e) => Outcome::error(EXIT_USAGE, e),
    }
}

pub fn run(config: &CliConfig) -> Outcome {
    match &config.command {
        Command::Solve(cmd) => run_solve(cmd),
        Command::Verify(cmd) => run_verify(cmd),
        Command::Bench(cmd) => run_bench_command(cmd),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_skips_grid_above_size_limit() {
        let all = [OracleChoice::All];
        assert!(selected_methods(&all, 4).contains(&Method::GridSearch));
        assert!(!selected_methods(&all, 5).contains(&Method::GridSearch));
        assert_eq!(
            selected_methods(&[OracleChoice::Grid, OracleChoice::All], 5),
            vec![Method::LambdaBisection, Method::ProjectedGradient, Method::GridSearch]
        );
    }
}
