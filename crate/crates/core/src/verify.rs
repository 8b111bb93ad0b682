//! Seeded falsification sweeps over random Gaussian channels, and the
//! closed-form vs grid-oracle table of the scalar dual function.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremal::{
    alpha_family_channel, f_closed_scalar, f_lower_vector, f_oracle_scalar_many, oohama_gap, scalar_main_gap,
    theorem1_gap_forms,
};
use crate::gauss_model::{
    mutual_information, random_channel, random_spd, GaussianAuxChannel, GaussianPairModel, Side,
};
use crate::linalg::{Matrix, SymmetricEigen};
use crate::rng::{stream, streams};

/// Gaps below `-GAP_TOLERANCE` count as violations.
pub const GAP_TOLERANCE: f64 = 1e-9;

pub const MAX_DIM: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Scalar main inequality.
    Thm3,
    /// Vector inequality on scalar models.
    Thm1Scalar,
    /// Vector inequality on `dim`-dimensional models.
    Thm1Vector,
    /// One-auxiliary inequality; scalar model when `dim = 1`.
    Oohama,
    /// One-auxiliary inequality on `dim`-dimensional models.
    VecEpi,
}

impl SweepMode {
    pub const ALL: [SweepMode; 5] = [
        SweepMode::Thm3,
        SweepMode::Thm1Scalar,
        SweepMode::Thm1Vector,
        SweepMode::Oohama,
        SweepMode::VecEpi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepMode::Thm3 => "thm3",
            SweepMode::Thm1Scalar => "thm1-scalar",
            SweepMode::Thm1Vector => "thm1-vector",
            SweepMode::Oohama => "oohama",
            SweepMode::VecEpi => "vec-epi",
        }
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown verify mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub mode: SweepMode,
    pub trials: usize,
    pub dim: usize,
    pub seed: u64,
    /// For `vec-epi`: every other sample uses a channel with `Σ_{X|U} = αΣ_Z`.
    pub inject_equality: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidConfig(format!("dim must lie in 1..={MAX_DIM}, got {}", self.dim)));
        }
        if matches!(self.mode, SweepMode::Thm3 | SweepMode::Thm1Scalar) && self.dim != 1 {
            return Err(Error::InvalidConfig(format!("mode {} is scalar; dim must be 1", self.mode)));
        }
        if self.inject_equality && self.mode != SweepMode::VecEpi {
            return Err(Error::InvalidConfig("equality injection applies to vec-epi only".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSample {
    pub index: usize,
    pub dim: usize,
    /// Source correlation for scalar models.
    pub rho: Option<f64>,
    /// Output dimensions of `U` and `V` (0 for a constant channel).
    pub u_dim: usize,
    pub v_dim: usize,
    /// Set for injected equality-family channels.
    pub alpha: Option<f64>,
    pub gap: f64,
    /// Discrepancy between the two equivalent forms of the vector inequality.
    pub form_residual: Option<f64>,
    /// Functional minus the vector dual bound at `λ = 1 + 1/α`.
    pub bound_excess: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub mode: SweepMode,
    pub trials: usize,
    pub dim: usize,
    pub seed: u64,
    pub min_gap: f64,
    pub mean_gap: f64,
    pub argmin: SweepSample,
    pub violations: usize,
    pub max_form_residual: Option<f64>,
    pub injected: usize,
    pub max_injected_abs_gap: Option<f64>,
    pub max_injected_bound_error: Option<f64>,
}

fn maybe_degenerate(side: Side, n: usize, rng: &mut ChaCha8Rng) -> GaussianAuxChannel<f64> {
    if rng.random::<f64>() < 0.1 {
        GaussianAuxChannel::degenerate(side)
    } else {
        random_channel(side, n, rng)
    }
}

fn random_rho(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-0.99..0.99)
}

fn random_vector_model(n: usize, rng: &mut ChaCha8Rng) -> Result<GaussianPairModel<f64>> {
    GaussianPairModel::vector(random_spd(n, rng), random_spd(n, rng))
}

/// `α` with `αΣ_Z < Σ_X`: a fraction of `λ_min(Σ_X)/λ_max(Σ_Z)`.
fn realizable_alpha(sigma_x: &Matrix<f64>, sigma_z: &Matrix<f64>, rng: &mut ChaCha8Rng) -> Result<f64> {
    let lo = SymmetricEigen::new(sigma_x)?.min_value();
    let hi = SymmetricEigen::new(sigma_z)?.max_value();
    Ok(rng.random_range(0.1..0.9) * lo / hi)
}

fn sample(cfg: &SweepConfig, index: usize) -> Result<SweepSample> {
    let mut rng = stream(cfg.seed, index as u64, streams::SWEEP);
    let n = cfg.dim;
    let mut out = SweepSample {
        index,
        dim: n,
        rho: None,
        u_dim: 0,
        v_dim: 0,
        alpha: None,
        gap: 0.0,
        form_residual: None,
        bound_excess: None,
    };
    match cfg.mode {
        SweepMode::Thm3 | SweepMode::Thm1Scalar => {
            let rho = random_rho(&mut rng);
            let u = maybe_degenerate(Side::OnX, 1, &mut rng);
            let v = maybe_degenerate(Side::OnY, 1, &mut rng);
            out.rho = Some(rho);
            out.u_dim = u.output_dim();
            out.v_dim = v.output_dim();
            if cfg.mode == SweepMode::Thm3 {
                out.gap = scalar_main_gap(rho, &u, &v)?;
            } else {
                let g = theorem1_gap_forms(&GaussianPairModel::scalar(rho)?, &u, &v)?;
                out.gap = g.conditional_form;
                out.form_residual = Some(g.form_residual);
            }
        }
        SweepMode::Thm1Vector => {
            let model = random_vector_model(n, &mut rng)?;
            let u = maybe_degenerate(Side::OnX, n, &mut rng);
            let v = maybe_degenerate(Side::OnY, n, &mut rng);
            out.u_dim = u.output_dim();
            out.v_dim = v.output_dim();
            let g = theorem1_gap_forms(&model, &u, &v)?;
            out.gap = g.conditional_form;
            out.form_residual = Some(g.form_residual);
        }
        SweepMode::Oohama | SweepMode::VecEpi => {
            let model = if cfg.mode == SweepMode::Oohama && n == 1 {
                let rho = random_rho(&mut rng);
                out.rho = Some(rho);
                GaussianPairModel::scalar(rho)?
            } else {
                random_vector_model(n, &mut rng)?
            };
            let u = if cfg.inject_equality && index % 2 == 1 {
                let GaussianPairModel::Vector { sigma_x, sigma_z } = &model else {
                    unreachable!("vec-epi uses vector models")
                };
                let alpha = realizable_alpha(sigma_x, sigma_z, &mut rng)?;
                let u = alpha_family_channel(&model, alpha)?;
                let lambda = 1.0 + 1.0 / alpha;
                let info = mutual_information(&model, &u, &GaussianAuxChannel::degenerate(Side::OnY))?;
                let bound = f_lower_vector(lambda, sigma_x, sigma_z)?;
                out.alpha = Some(alpha);
                out.bound_excess = Some(info.dual_functional(lambda) - bound.value_bits);
                u
            } else {
                maybe_degenerate(Side::OnX, n, &mut rng)
            };
            out.u_dim = u.output_dim();
            out.gap = oohama_gap(&model, &u)?;
        }
    }
    Ok(out)
}

/// Runs the sweep; samples come back in index order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<(SweepSummary, Vec<SweepSample>)> {
    cfg.validate()?;
    let samples = (0..cfg.trials).map(|i| sample(cfg, i)).collect::<Result<Vec<_>>>()?;
    let argmin = samples
        .iter()
        .fold(&samples[0], |best, s| if s.gap < best.gap { s } else { best })
        .clone();
    let fold_max = |it: &mut dyn Iterator<Item = f64>| it.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    let injected: Vec<&SweepSample> = samples.iter().filter(|s| s.alpha.is_some()).collect();
    let summary = SweepSummary {
        mode: cfg.mode,
        trials: cfg.trials,
        dim: cfg.dim,
        seed: cfg.seed,
        min_gap: argmin.gap,
        mean_gap: samples.iter().map(|s| s.gap).sum::<f64>() / samples.len() as f64,
        argmin,
        violations: samples.iter().filter(|s| s.gap < -GAP_TOLERANCE).count(),
        max_form_residual: fold_max(&mut samples.iter().filter_map(|s| s.form_residual)),
        injected: injected.len(),
        max_injected_abs_gap: fold_max(&mut injected.iter().map(|s| s.gap.abs())),
        max_injected_bound_error: fold_max(&mut injected.iter().filter_map(|s| s.bound_excess.map(f64::abs))),
    };
    Ok((summary, samples))
}

fn opt(x: Option<f64>, precision: usize) -> String {
    x.map_or_else(String::new, |v| format!("{v:.precision$}"))
}

/// CSV of sweep samples with header `sample,dim,rho,u_dim,v_dim,alpha,gap`.
pub fn samples_csv(samples: &[SweepSample], precision: usize) -> String {
    let mut out = String::from("sample,dim,rho,u_dim,v_dim,alpha,gap\n");
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.p$}\n",
            s.index,
            s.dim,
            opt(s.rho, precision),
            s.u_dim,
            s.v_dim,
            opt(s.alpha, precision),
            s.gap,
            p = precision
        ));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualRow {
    pub lambda: f64,
    pub f_closed: f64,
    pub f_oracle: f64,
    /// `f_oracle − f_closed`.
    pub gap: f64,
}

pub fn dual_table(rho: f64, lambdas: &[f64], grid: usize) -> Result<Vec<DualRow>> {
    let oracle = f_oracle_scalar_many(lambdas, rho, grid)?;
    lambdas
        .iter()
        .zip(oracle)
        .map(|(&lambda, o)| {
            let f_closed = f_closed_scalar(lambda, rho)?.value_bits;
            Ok(DualRow {
                lambda,
                f_closed,
                f_oracle: o.value,
                gap: o.value - f_closed,
            })
        })
        .collect()
}

/// CSV with header `lambda,f_closed,f_oracle,gap`.
pub fn dual_csv(rows: &[DualRow], precision: usize) -> String {
    let mut out = String::from("lambda,f_closed,f_oracle,gap\n");
    for r in rows {
        out.push_str(&format!(
            "{:.p$},{:.p$},{:.p$},{:.p$}\n",
            r.lambda,
            r.f_closed,
            r.f_oracle,
            r.gap,
            p = precision
        ));
    }
    out
}
