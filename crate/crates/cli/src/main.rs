//! `gauss-extremal`: region queries, dual-function tables, inequality
//! falsification sweeps and covering-ellipsoid simulations.
//!
//! stdout carries data (JSON or CSV), stderr carries diagnostics. Exit codes:
//! 0 success, 1 a checked property failed (outside the region, a negative
//! gap, a failed simulation check), 2 invalid input.

mod args;
mod output;

use std::process::ExitCode;

use clap::Parser;
use gauss_extremal::ellipsoid_codec::{run_simulation, trials_csv, CodecConfig};
use gauss_extremal::io::read_matrix_file;
use gauss_extremal::linalg::Matrix;
use gauss_extremal::rate_region::{region_verdict, RegionQuery, RegionVerdict};
use gauss_extremal::verify::{dual_csv, dual_table, run_sweep, samples_csv, SweepConfig, GAP_TOLERANCE};
use serde::Serialize;

use args::{Cli, Command, DualArgs, EllipsoidArgs, Format, RegionArgs, VerifyArgs};
use output::{emit, rounded_json};

/// Largest determinant-identity residual accepted by `ellipsoid`.
const RESIDUAL_LIMIT: f64 = 1e-9;

/// Bad input or an unwritable output file; reported with exit code 2.
struct Failure(String);

impl From<gauss_extremal::Error> for Failure {
    fn from(e: gauss_extremal::Error) -> Self {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let seed = cli.seed.unwrap_or(0);
    let precision = cli.precision;
    match &cli.command {
        Command::Region(a) => region(a, cli.output.unwrap_or(Format::Json), precision),
        Command::Dual(a) => dual(a, cli.output.unwrap_or(Format::Csv), precision),
        Command::Verify(a) => verify(a, seed, cli.output.unwrap_or(Format::Json), precision),
        Command::Ellipsoid(a) => ellipsoid(a, seed, cli.output.unwrap_or(Format::Json), precision),
    }
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[derive(Serialize)]
struct RegionOutput {
    query: RegionQuery<f64>,
    verdict: RegionVerdict<f64>,
}

fn region(a: &RegionArgs, format: Format, precision: usize) -> Result<ExitCode, Failure> {
    let query = RegionQuery {
        rho: a.rho,
        r_x: a.rx,
        r_y: a.ry,
        nu_x: a.nux,
        nu_y: a.nuy,
    };
    let verdict = region_verdict(&query)?;
    match format {
        Format::Json => emit(&rounded_json(&RegionOutput { query, verdict }, precision)),
        Format::Csv => {
            let p = precision;
            emit(&format!(
                "rho,r_x,r_y,nu_x,nu_y,slack_rx,slack_ry,slack_sum,inside\n\
                 {:.p$},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$},{}\n",
                query.rho,
                query.r_x,
                query.r_y,
                query.nu_x,
                query.nu_y,
                verdict.slack_rx,
                verdict.slack_ry,
                verdict.slack_sum,
                verdict.inside
            ))
        }
    }
    Ok(status(verdict.inside))
}

fn dual(a: &DualArgs, format: Format, precision: usize) -> Result<ExitCode, Failure> {
    let rows = dual_table(a.rho, &a.lambda, a.grid)?;
    match format {
        Format::Csv => emit(&dual_csv(&rows, precision)),
        Format::Json => emit(&rounded_json(&rows, precision)),
    }
    Ok(status(rows.iter().all(|r| r.gap >= -GAP_TOLERANCE)))
}

fn verify(a: &VerifyArgs, seed: u64, format: Format, precision: usize) -> Result<ExitCode, Failure> {
    let cfg = SweepConfig {
        mode: a.mode,
        trials: a.trials,
        dim: a.dim,
        seed,
        inject_equality: a.inject_equality,
    };
    let (summary, samples) = run_sweep(&cfg)?;
    if let Some(path) = &a.samples_csv {
        std::fs::write(path, samples_csv(&samples, precision))
            .map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))?;
    }
    match format {
        Format::Json => emit(&rounded_json(&summary, precision)),
        Format::Csv => emit(&samples_csv(&samples, precision)),
    }
    let equality_ok = !a.inject_equality || summary.min_gap <= GAP_TOLERANCE;
    if summary.violations > 0 {
        eprintln!("{} of {} samples have gap below -{GAP_TOLERANCE:e}", summary.violations, summary.trials);
    }
    Ok(status(summary.violations == 0 && equality_ok))
}

fn ellipsoid(a: &EllipsoidArgs, seed: u64, format: Format, precision: usize) -> Result<ExitCode, Failure> {
    let sigma = match &a.sigma_file {
        Some(path) => read_matrix_file(path)?,
        None => Matrix::identity(a.n),
    };
    let config = CodecConfig {
        n: a.n,
        k: a.k,
        rho: a.rho,
        sigma,
        nu_x: a.nux,
        nu_y: a.nuy,
        delta: a.delta,
        trials: a.trials,
        seed,
    };
    let report = run_simulation(&config)?;
    if let Some(path) = &a.trials_csv {
        std::fs::write(path, trials_csv(&report.trials, precision))
            .map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))?;
    }
    match format {
        Format::Json => emit(&rounded_json(&report, precision)),
        Format::Csv => emit(&trials_csv(&report.trials, precision)),
    }
    if !report.region_inside {
        eprintln!("implied rates fall outside the region");
    }
    if !(report.residual_max <= RESIDUAL_LIMIT) {
        eprintln!("determinant identity residual {:e} exceeds {RESIDUAL_LIMIT:e}", report.residual_max);
    }
    Ok(status(report.region_inside && report.residual_max <= RESIDUAL_LIMIT))
}
