use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(
    name = "equimarginal",
    version,
    about = "Optimal unit-budget allocation for returns a*x/(1+x)"
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Solve one instance with the closed form.
    Solve(SolveArgs),
    /// Solve one instance and cross-check it against numerical oracles.
    Verify(VerifyArgs),
    /// Time the closed-form solver on generated instances.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, PartialEq, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["coefficients", "input"])))]
pub struct InputArgs {
    /// Comma-separated positive coefficients, e.g. 0.8,0.25
    #[arg(short = 'a', long = "coefficients", value_name = "LIST", value_parser = parse_coefficient_list, allow_hyphen_values = true)]
    pub coefficients: Option<CoefficientList>,

    /// File with one coefficient per line or a single comma-separated line
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Oracles to run; repeat or comma-separate to pick several
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [OracleChoice::All])]
    pub oracle: Vec<OracleChoice>,

    /// Largest allowed objective gap between any two methods
    #[arg(long, default_value_t = 1e-5, value_parser = parse_positive)]
    pub tol: f64,

    /// Lattice spacing for the grid oracle
    #[arg(long, default_value_t = 1e-3, value_parser = parse_positive)]
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct BenchArgs {
    /// Instance size
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,

    /// Number of instances to solve
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,

    #[arg(long)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = BenchFormat::Json)]
    pub format: BenchFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleChoice {
    All,
    Bisection,
    Gradient,
    Grid,
}

/// Coefficients given inline on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientList(pub Vec<f64>);

/// Parses `0.8,0.25` into numbers, naming the first token that fails.
pub fn parse_coefficient_list(s: &str) -> Result<CoefficientList, String> {
    s.split(',')
        .map(|token| {
            let token = token.trim();
            token
                .parse::<f64>()
                .map_err(|_| format!("invalid number '{token}'"))
        })
        .collect::<Result<_, _>>()
        .map(CoefficientList)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err(format!("'{s}' must be a positive number")),
        Err(_) => Err(format!("invalid number '{s}'")),
    }
}

pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    CliConfig::try_parse_from(std::iter::once("equimarginal".into()).chain(argv.into_iter().map(Into::into)))
}
