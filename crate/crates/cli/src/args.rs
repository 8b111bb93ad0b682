use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gauss_extremal::rng::SEED_ENV;
use gauss_extremal::verify::SweepMode;

#[derive(Parser, Debug)]
#[command(name = "gauss-extremal", version, about = "Gaussian extremal inequalities, dual functions, rate regions and covering-ellipsoid simulation")]
pub struct Cli {
    /// Base seed for every randomized command (default 0).
    #[arg(long, global = true, env = SEED_ENV)]
    pub seed: Option<u64>,

    /// Decimal places for printed numbers.
    #[arg(long, global = true, default_value_t = 12)]
    pub precision: usize,

    /// Output format (default: csv for `dual`, json otherwise).
    #[arg(long, global = true, value_enum)]
    pub output: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Test a rate/distortion point against the ellipsoid-compression region.
    /// Exit 0 inside, 1 outside, 2 on invalid input.
    Region(RegionArgs),
    /// Tabulate the scalar dual function: closed form vs grid oracle.
    Dual(DualArgs),
    /// Falsification sweep of an inequality over random Gaussian channels.
    Verify(VerifyArgs),
    /// Monte Carlo covering-ellipsoid simulation. Exit 0 iff the implied
    /// rates are inside the region and the determinant identity holds.
    Ellipsoid(EllipsoidArgs),
}

#[derive(Args, Debug)]
pub struct RegionArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub rx: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub ry: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub nux: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub nuy: f64,
}

#[derive(Args, Debug)]
pub struct DualArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub rho: f64,
    /// Comma-separated multipliers.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1.., allow_negative_numbers = true)]
    pub lambda: Vec<f64>,
    /// Grid resolution of the oracle (at least 100).
    #[arg(long, default_value_t = 2000)]
    pub grid: usize,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_mode)]
    pub mode: SweepMode,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Source dimension (1 for the scalar modes, at most 64).
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// vec-epi only: every other sample uses an equality-family channel.
    #[arg(long)]
    pub inject_equality: bool,
    /// Also write per-sample rows to this CSV file.
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<SweepMode, String> {
    s.parse().map_err(|e: gauss_extremal::Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct EllipsoidArgs {
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.25)]
    pub nux: f64,
    #[arg(long, default_value_t = 0.25)]
    pub nuy: f64,
    #[arg(long, default_value_t = 0.0025)]
    pub delta: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Source covariance as a JSON matrix file `{"n": .., "data": [..]}`.
    #[arg(long, conflicts_with = "sigma")]
    pub sigma_file: Option<PathBuf>,
    /// Built-in source covariance.
    #[arg(long, value_enum)]
    pub sigma: Option<SigmaKind>,
    /// Also write per-trial rows to this CSV file.
    #[arg(long)]
    pub trials_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SigmaKind {
    Identity,
}
