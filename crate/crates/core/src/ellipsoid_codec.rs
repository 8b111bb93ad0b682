//! Monte Carlo simulator of covering ellipsoids built from rate-limited
//! descriptions of correlated Gaussian points.
//!
//! Each trial draws `k` pairs `(X_i, Y_i)` with `Cov X = Cov Y = Σ` and
//! `Cov(X, Y) = ρΣ`, passes them through a Gaussian test channel whose
//! per-coordinate MMSEs hit `(ν_x, ν_y)`, and shrinks `A_x` along the span
//! of the description centers to get `B_x`. Coverage is `‖B_x X_i‖ ≤ 1`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauss_model::{mutual_information, GaussianAuxChannel, GaussianPairModel, Side};
use crate::io::MatrixFile;
use crate::linalg::{check_symmetric, dot, lu_log_abs_det, norm, orthonormal_span, Cholesky, Matrix, SymmetricEigen};
use crate::rate_region::{region_verdict, RegionQuery, RegionVerdict};
use crate::rng::{stream, streams};
use crate::scalar::Real;

/// Bits of slack added to each implied rate so round-off cannot push the
/// rate pair across the sum-rate boundary it sits on.
pub const RATE_SLACK_BITS: f64 = 1e-9;

/// Relative tolerance on the matched MMSE targets (widened to a few ulps for `f32`).
const MMSE_MATCH_TOLERANCE: f64 = 1e-9;

/// `log c_n` with `c_n = π^{n/2}/Γ(n/2 + 1)` the unit-ball volume.
pub fn log_unit_ball_volume<T: Real>(n: usize) -> T {
    let half = T::lit(0.5);
    let m = n / 2;
    let log_gamma = if n % 2 == 0 {
        (1..=m).map(|j| T::of_usize(j).ln()).sum::<T>()
    } else {
        // Γ(m + 3/2) = √π · Π_{j=0..m} (j + ½)
        half * T::PI().ln() + (0..=m).map(|j| (T::of_usize(j) + half).ln()).sum::<T>()
    };
    half * T::of_usize(n) * T::PI().ln() - log_gamma
}

pub fn unit_ball_volume<T: Real>(n: usize) -> T {
    log_unit_ball_volume::<T>(n).exp()
}

/// `√n·c_n^{1/n}`, which tends to `√(2πe)`.
pub fn stirling_ratio<T: Real>(n: usize) -> T {
    let nn = T::of_usize(n);
    (T::lit(0.5) * nn.ln() + log_unit_ball_volume::<T>(n) / nn).exp()
}

/// `{x : ‖A·x − b‖ ≤ 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid<T> {
    a_matrix: Matrix<T>,
    b_center: Vec<T>,
}

impl<T: Real> Ellipsoid<T> {
    pub fn new(a_matrix: Matrix<T>, b_center: Vec<T>) -> Result<Self> {
        if !a_matrix.is_square() || a_matrix.rows() != b_center.len() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, b has {} entries",
                a_matrix.rows(),
                a_matrix.cols(),
                b_center.len()
            )));
        }
        Ok(Self { a_matrix, b_center })
    }

    pub fn a_matrix(&self) -> &Matrix<T> {
        &self.a_matrix
    }

    pub fn b_center(&self) -> &[T] {
        &self.b_center
    }

    pub fn dim(&self) -> usize {
        self.b_center.len()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        let ax = self.a_matrix.mul_vec(x);
        let d: Vec<T> = ax.iter().zip(&self.b_center).map(|(&p, &q)| p - q).collect();
        norm(&d) <= T::one()
    }

    /// `log c_n − log|A|`. Symmetric `A` must pass Cholesky; other `A` are
    /// handled by LU.
    pub fn log_volume(&self) -> Result<T> {
        let log_det = if check_symmetric(&self.a_matrix).is_ok() {
            Cholesky::new(&self.a_matrix)?.log_det()
        } else {
            lu_log_abs_det(&self.a_matrix)?
        };
        Ok(log_unit_ball_volume::<T>(self.dim()) - log_det)
    }

    pub fn volume(&self) -> Result<T> {
        Ok(self.log_volume()?.exp())
    }
}

pub fn ellipsoid_volume<T: Real>(e: &Ellipsoid<T>) -> Result<T> {
    e.volume()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodecConfig<T> {
    pub n: usize,
    pub k: usize,
    pub rho: T,
    pub sigma: Matrix<T>,
    pub nu_x: T,
    pub nu_y: T,
    pub delta: T,
    pub trials: usize,
    pub seed: u64,
}

impl<T: Real> CodecConfig<T> {
    pub const DEFAULT_DELTA: f64 = 0.0025;

    /// Identity `Σ`, default `δ`.
    pub fn with_identity(n: usize, k: usize, rho: T, nu_x: T, nu_y: T, trials: usize, seed: u64) -> Self {
        Self {
            n,
            k,
            rho,
            sigma: Matrix::identity(n),
            nu_x,
            nu_y,
            delta: T::lit(Self::DEFAULT_DELTA),
            trials,
            seed,
        }
    }

    pub fn tau(&self) -> T {
        T::one() - T::lit(2.0) * self.delta.sqrt()
    }

    pub fn gamma(&self) -> T {
        (T::one() - self.delta) * self.tau()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.k == 0 || self.k > self.n {
            return bad(format!("k must lie in 1..=n, got k = {} with n = {}", self.k, self.n));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.rho.abs() < T::one()) {
            return bad(format!("rho must lie in (-1, 1), got {}", self.rho));
        }
        for (name, nu) in [("nu_x", self.nu_x), ("nu_y", self.nu_y)] {
            if !(nu > T::zero() && nu <= T::one()) {
                return bad(format!("{name} must lie in (0, 1], got {nu}"));
            }
        }
        if !(self.delta > T::zero() && self.delta < T::lit(0.25)) {
            return bad(format!("delta must lie in (0, 0.25), got {}", self.delta));
        }
        if self.tau() <= T::zero() {
            return Err(Error::DegenerateShrinkage {
                tau: self.tau().as_f64(),
            });
        }
        for (name, nu) in [("nu_x", self.nu_x), ("nu_y", self.nu_y)] {
            if !((self.delta / nu).sqrt() < T::one()) {
                return bad(format!("sqrt(delta / {name}) must be below 1"));
            }
        }
        if self.sigma.rows() != self.n || self.sigma.cols() != self.n {
            return bad(format!(
                "sigma is {}x{} but n = {}",
                self.sigma.rows(),
                self.sigma.cols(),
                self.n
            ));
        }
        Cholesky::new(&self.sigma)?;
        Ok(())
    }
}

/// Per-coordinate Gaussian test channel on whitened sources with correlation
/// `ρ`: `U = X + N(0, 1/p)`, `V = Y + N(0, 1/r)`. Precisions `p`, `r` are
/// stored so that an uninformative description is simply `p = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DescriptionChannel<T> {
    pub rho: T,
    pub precision_x: T,
    pub precision_y: T,
    /// Posterior covariance of `(X, Y)` given `(U, V)`: `[[pxx, pxy], [pxy, pyy]]`.
    pub posterior: [T; 3],
}

impl<T: Real> DescriptionChannel<T> {
    pub fn from_precisions(rho: T, p: T, r: T) -> Result<Self> {
        if !(rho.abs() < T::one()) || !(p >= T::zero()) || !(r >= T::zero()) {
            return Err(Error::Domain("need |rho| < 1 and nonnegative precisions".into()));
        }
        let s = T::one() / (T::one() - rho * rho);
        let (jxx, jyy, jxy) = (s + p, s + r, -rho * s);
        let det = jxx * jyy - jxy * jxy;
        Ok(Self {
            rho,
            precision_x: p,
            precision_y: r,
            posterior: [jyy / det, -jxy / det, jxx / det],
        })
    }

    /// Finds the precisions whose per-coordinate MMSEs are `(ν_x, ν_y)`.
    ///
    /// With `s = 1/(1−ρ²)`, `1/mmse_x = s + p − ρ²s²/(s + r)` and symmetrically
    /// for `y`. Eliminating `p` leaves an increasing function of `r`, solved by
    /// bisection.
    pub fn solve(rho: T, nu_x: T, nu_y: T) -> Result<Self> {
        if !(rho.abs() < T::one()) {
            return Err(Error::Domain(format!("rho must lie in (-1, 1), got {rho}")));
        }
        for nu in [nu_x, nu_y] {
            if !(nu > T::zero() && nu <= T::one()) {
                return Err(Error::Infeasible(format!("targets must lie in (0, 1], got {nu}")));
            }
        }
        let one = T::one();
        let r2 = rho * rho;
        let s = one / (one - r2);
        let c = r2 * s * s;
        let ax = one / nu_x - s;
        let ay = one / nu_y - s;
        let p_of = |r: T| ax + c / (s + r);
        let g = |r: T| r - c / (s + p_of(r)) - ay;
        let scale = one + ay.abs() + c;
        let slack = T::lit(1e-12).max(T::lit(16.0) * T::epsilon()) * scale;

        let infeasible = || {
            Err(Error::Infeasible(format!(
                "no nonnegative noise precisions reach mmse targets ({nu_x}, {nu_y}) at rho = {rho}"
            )))
        };
        if p_of(T::zero()) < -slack || g(T::zero()) > slack {
            return infeasible();
        }
        // largest r keeping p(r) >= 0
        let r_cap = if ax < T::zero() { c / (-ax) - s } else { T::infinity() };
        let mut hi = (r2 * s + ay).max(T::zero()) + one;
        if hi > r_cap {
            hi = r_cap.max(T::zero());
            if g(hi) < -slack {
                return infeasible();
            }
        }
        let mut lo = T::zero();
        if g(lo) >= T::zero() {
            hi = lo;
        }
        for _ in 0..200 {
            let mid = T::lit(0.5) * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // round-off residue in place of an unused description
        let snap = |v: T| if v <= slack { T::zero() } else { v };
        let r = snap(hi);
        let p = snap(p_of(r));
        let ch = Self::from_precisions(rho, p, r)?;
        let tol = T::lit(MMSE_MATCH_TOLERANCE).max(T::lit(64.0) * T::epsilon());
        if (ch.mmse_x() - nu_x).abs() > tol * nu_x || (ch.mmse_y() - nu_y).abs() > tol * nu_y {
            return infeasible();
        }
        Ok(ch)
    }

    pub fn mmse_x(&self) -> T {
        self.posterior[0]
    }

    pub fn mmse_y(&self) -> T {
        self.posterior[2]
    }

    /// Noise variances `1/p`, `1/r` (infinite for an unused description).
    pub fn noise_variances(&self) -> (T, T) {
        (T::one() / self.precision_x, T::one() / self.precision_y)
    }

    /// Per-coordinate information terms, via the scalar log-determinant path.
    pub fn information(&self) -> Result<crate::gauss_model::InfoVector<T>> {
        let model = GaussianPairModel::scalar(self.rho)?;
        let chan = |side, prec: T| {
            if prec == T::zero() {
                Ok(GaussianAuxChannel::degenerate(side))
            } else {
                GaussianAuxChannel::new(side, Matrix::scalar(T::one()), Matrix::scalar(T::one() / prec))
            }
        };
        mutual_information(&model, &chan(Side::OnX, self.precision_x)?, &chan(Side::OnY, self.precision_y)?)
    }

    /// Rates per dimension: each encoder pays its conditional information
    /// plus half of `I(U;V)`, which puts the pair on the sum-rate line
    /// `r_x + r_y = I(X,Y;U,V)`.
    pub fn implied_rates(&self) -> Result<ImpliedRates<T>> {
        let info = self.information()?;
        let half_uv = T::lit(0.5) * info.i_uv;
        let slack = T::lit(RATE_SLACK_BITS);
        Ok(ImpliedRates {
            r_x: (info.i_x_uv - info.i_xv) + half_uv + slack,
            r_y: info.i_yv_given_u + half_uv + slack,
        })
    }

    /// Conditional means of whitened `x`, `y` from freshly drawn descriptions.
    pub fn describe<R: Rng + ?Sized>(&self, x: &[T], y: &[T], noise_u: &mut R, noise_v: &mut R) -> (Vec<T>, Vec<T>)
    where
        StandardNormal: Distribution<T>,
    {
        let (p, r) = (self.precision_x, self.precision_y);
        let (sp, sr) = (p.sqrt(), r.sqrt());
        let [pxx, pxy, pyy] = self.posterior;
        let mut xh = Vec::with_capacity(x.len());
        let mut yh = Vec::with_capacity(y.len());
        for (&xi, &yi) in x.iter().zip(y) {
            let e: T = StandardNormal.sample(noise_u);
            let f: T = StandardNormal.sample(noise_v);
            // precision-weighted observations p·U and r·V
            let wu = p * xi + sp * e;
            let wv = r * yi + sr * f;
            xh.push(pxx * wu + pxy * wv);
            yh.push(pxy * wu + pyy * wv);
        }
        (xh, yh)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImpliedRates<T> {
    pub r_x: T,
    pub r_y: T,
}

/// `X' = Λ^{-1/2}Uᵀ X` for `Σ = U Λ Uᵀ`.
#[derive(Clone, Debug)]
pub struct Whitening<T> {
    pub forward: Matrix<T>,
    pub inverse: Matrix<T>,
    pub log_det_sigma: T,
}

impl<T: Real> Whitening<T> {
    pub fn new(sigma: &Matrix<T>) -> Result<Self> {
        let log_det_sigma = Cholesky::new(sigma)?.log_det();
        let eig = SymmetricEigen::new(sigma)?;
        let n = sigma.rows();
        if eig.min_value() <= T::zero() {
            return Err(Error::NotPositiveDefinite {
                index: 0,
                pivot: eig.min_value().as_f64(),
                threshold: 0.0,
            });
        }
        let v = &eig.vectors;
        let forward = Matrix::from_fn(n, n, |i, j| v[(j, i)] / eig.values[i].sqrt());
        let inverse = Matrix::from_fn(n, n, |i, j| v[(i, j)] * eig.values[j].sqrt());
        Ok(Self {
            forward,
            inverse,
            log_det_sigma,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ShrunkMatrix<T> {
    pub b_matrix: Matrix<T>,
    /// Orthonormal basis of the center span.
    pub basis: Vec<Vec<T>>,
    pub rank: usize,
    pub log_det_b: T,
    /// `log|A_x| + (n−k')·ln τ + k'·ln(τ−γ)`.
    pub log_det_predicted: T,
    pub residual: T,
}

/// `B = (τI − γ·Σ u_j u_jᵀ)·A_x` with `u_j` an orthonormal basis of the
/// centers' span, `τ = 1 − 2√δ`, `γ = (1−δ)τ`.
pub fn build_shrunk_matrix<T: Real>(a_x: &Matrix<T>, centers: &[Vec<T>], delta: T) -> Result<ShrunkMatrix<T>> {
    let log_det_a = lu_log_abs_det(a_x)?;
    build_shrunk_matrix_with(a_x, log_det_a, centers, delta)
}

fn build_shrunk_matrix_with<T: Real>(
    a_x: &Matrix<T>,
    log_det_a: T,
    centers: &[Vec<T>],
    delta: T,
) -> Result<ShrunkMatrix<T>> {
    let n = a_x.rows();
    if !a_x.is_square() || centers.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch("centers must match the dimension of A_x".into()));
    }
    let tau = T::one() - T::lit(2.0) * delta.sqrt();
    if !(tau > T::zero()) {
        return Err(Error::DegenerateShrinkage { tau: tau.as_f64() });
    }
    let gamma = (T::one() - delta) * tau;
    let max_norm = centers.iter().map(|c| norm(c)).fold(T::zero(), T::max);
    let basis = orthonormal_span(centers, T::lit(1e-10) * max_norm);
    let rank = basis.len();

    let mut b = a_x.scale(tau);
    for u in &basis {
        // u·(uᵀA) costs O(n²) per basis vector
        let ut_a: Vec<T> = (0..n).map(|j| (0..n).map(|i| u[i] * a_x[(i, j)]).sum()).collect();
        for i in 0..n {
            let gi = gamma * u[i];
            for j in 0..n {
                b[(i, j)] -= gi * ut_a[j];
            }
        }
    }
    let log_det_b = lu_log_abs_det(&b)?;
    let log_det_predicted =
        log_det_a + T::of_usize(n - rank) * tau.ln() + T::of_usize(rank) * (tau - gamma).ln();
    Ok(ShrunkMatrix {
        b_matrix: b,
        basis,
        rank,
        log_det_b,
        log_det_predicted,
        residual: (log_det_b - log_det_predicted).abs(),
    })
}

/// Estimates for one trial, in original coordinates.
#[derive(Clone, Debug)]
pub struct TrialDescriptions<T> {
    pub x: Vec<Vec<T>>,
    pub y: Vec<Vec<T>>,
    pub x_hat: Vec<Vec<T>>,
    pub y_hat: Vec<Vec<T>>,
    pub x_white: Vec<Vec<T>>,
    pub y_white: Vec<Vec<T>>,
    pub x_hat_white: Vec<Vec<T>>,
    pub y_hat_white: Vec<Vec<T>>,
}

fn standard_normal_vec<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<T>
where
    StandardNormal: Distribution<T>,
{
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draws the `k` source pairs of one trial and their descriptions.
pub fn simulate_descriptions<T: Real>(
    config: &CodecConfig<T>,
    channel: &DescriptionChannel<T>,
    factor: &Cholesky<T>,
    whitening: &Whitening<T>,
    trial: u64,
) -> TrialDescriptions<T>
where
    StandardNormal: Distribution<T>,
{
    let n = config.n;
    let mut rx = stream(config.seed, trial, streams::SOURCE_X);
    let mut ry = stream(config.seed, trial, streams::SOURCE_Y);
    let mut ru = stream(config.seed, trial, streams::NOISE_U);
    let mut rv = stream(config.seed, trial, streams::NOISE_V);
    let c = (T::one() - config.rho * config.rho).sqrt();
    let mut out = TrialDescriptions {
        x: Vec::with_capacity(config.k),
        y: Vec::with_capacity(config.k),
        x_hat: Vec::with_capacity(config.k),
        y_hat: Vec::with_capacity(config.k),
        x_white: Vec::with_capacity(config.k),
        y_white: Vec::with_capacity(config.k),
        x_hat_white: Vec::with_capacity(config.k),
        y_hat_white: Vec::with_capacity(config.k),
    };
    for _ in 0..config.k {
        let x = factor.lower_mul(&standard_normal_vec(n, &mut rx));
        let z = factor.lower_mul(&standard_normal_vec(n, &mut ry));
        let y: Vec<T> = x.iter().zip(&z).map(|(&a, &b)| config.rho * a + c * b).collect();
        let xw = whitening.forward.mul_vec(&x);
        let yw = whitening.forward.mul_vec(&y);
        let (xhw, yhw) = channel.describe(&xw, &yw, &mut ru, &mut rv);
        out.x_hat.push(whitening.inverse.mul_vec(&xhw));
        out.y_hat.push(whitening.inverse.mul_vec(&yhw));
        out.x.push(x);
        out.y.push(y);
        out.x_white.push(xw);
        out.y_white.push(yw);
        out.x_hat_white.push(xhw);
        out.y_hat_white.push(yhw);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialReport<T> {
    pub trial: usize,
    pub covered_x: Vec<bool>,
    pub covered_y: Vec<bool>,
    pub norm_volume_x: T,
    pub norm_volume_y: T,
    pub rank_x: usize,
    pub rank_y: usize,
    pub residual_x: T,
    pub residual_y: T,
    pub implied_rates: ImpliedRates<T>,
}

impl<T: Real> TrialReport<T> {
    pub fn covered_x_frac(&self) -> T {
        frac(&self.covered_x)
    }

    pub fn covered_y_frac(&self) -> T {
        frac(&self.covered_y)
    }
}

fn frac<T: Real>(flags: &[bool]) -> T {
    T::of_usize(flags.iter().filter(|&&b| b).count()) / T::of_usize(flags.len().max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub sigma: MatrixFile,
    pub nu_x: f64,
    pub nu_y: f64,
    pub delta: f64,
    pub tau: f64,
    pub gamma: f64,
    pub trials: usize,
    pub seed: u64,
}

impl ConfigEcho {
    pub fn of<T: Real>(c: &CodecConfig<T>) -> Result<Self> {
        Ok(Self {
            n: c.n,
            k: c.k,
            rho: c.rho.as_f64(),
            sigma: MatrixFile::from_matrix(&c.sigma)?,
            nu_x: c.nu_x.as_f64(),
            nu_y: c.nu_y.as_f64(),
            delta: c.delta.as_f64(),
            tau: c.tau().as_f64(),
            gamma: c.gamma().as_f64(),
            trials: c.trials,
            seed: c.seed,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport<T> {
    pub config: ConfigEcho,
    pub coverage_x: T,
    pub coverage_y: T,
    /// Largest per-point-index miss rate across trials.
    pub max_point_failure_x: T,
    pub max_point_failure_y: T,
    pub mean_norm_vol_x: T,
    pub mean_norm_vol_y: T,
    pub implied_rates: ImpliedRates<T>,
    pub region_inside: bool,
    pub region: RegionVerdict<T>,
    pub residual_max: T,
    pub min_rank_x: usize,
    pub min_rank_y: usize,
    /// `‖Ĉ − I‖_F / n` for the sample covariance of whitened `X`.
    pub whitening_error: T,
    pub empirical_mse_x: T,
    pub empirical_mse_y: T,
    /// Fraction of centers with `‖b_i‖ ≥ 1/√δ`.
    pub center_exceed_frac_x: T,
    pub center_exceed_frac_y: T,
    pub channel: DescriptionChannel<T>,
    #[serde(skip)]
    pub trials: Vec<TrialReport<T>>,
}

/// Runs every trial and aggregates. Nothing is returned if any trial fails.
pub fn run_simulation<T: Real>(config: &CodecConfig<T>) -> Result<SimulationReport<T>>
where
    StandardNormal: Distribution<T>,
{
    config.validate()?;
    let n = config.n;
    let nn = T::of_usize(n);
    let channel = DescriptionChannel::solve(config.rho, config.nu_x, config.nu_y)?;
    let implied_rates = channel.implied_rates()?;
    let region = region_verdict(&RegionQuery {
        rho: config.rho,
        r_x: implied_rates.r_x,
        r_y: implied_rates.r_y,
        nu_x: config.nu_x,
        nu_y: config.nu_y,
    })?;

    let factor = Cholesky::new(&config.sigma)?;
    let whitening = Whitening::new(&config.sigma)?;
    let a_of = |nu: T| whitening.forward.scale(T::one() / (nn * nu).sqrt());
    let (a_x, a_y) = (a_of(config.nu_x), a_of(config.nu_y));
    let (ld_ax, ld_ay) = (lu_log_abs_det(&a_x)?, lu_log_abs_det(&a_y)?);
    let log_cn = log_unit_ball_volume::<T>(n);
    let two_pi_e = T::lit(2.0) * T::PI() * T::one().exp();
    let sigma_root = (whitening.log_det_sigma / nn).exp();
    let norm_volume = |log_det_b: T, nu: T| ((log_cn - log_det_b) / nn).exp() / (two_pi_e * nu * sigma_root).sqrt();
    let radius = T::one() / config.delta.sqrt();

    let mut reports = Vec::with_capacity(config.trials);
    let mut miss_x = vec![0usize; config.k];
    let mut miss_y = vec![0usize; config.k];
    let mut exceed = (0usize, 0usize);
    let mut cov_sum = Matrix::<T>::zeros(n, n);
    let mut sq_err = (T::zero(), T::zero());
    for t in 0..config.trials {
        let d = simulate_descriptions(config, &channel, &factor, &whitening, t as u64);
        let bx: Vec<Vec<T>> = d.x_hat.iter().map(|h| a_x.mul_vec(h)).collect();
        let by: Vec<Vec<T>> = d.y_hat.iter().map(|h| a_y.mul_vec(h)).collect();
        let sx = build_shrunk_matrix_with(&a_x, ld_ax, &bx, config.delta)?;
        let sy = build_shrunk_matrix_with(&a_y, ld_ay, &by, config.delta)?;
        let covered_x: Vec<bool> = d.x.iter().map(|x| norm(&sx.b_matrix.mul_vec(x)) <= T::one()).collect();
        let covered_y: Vec<bool> = d.y.iter().map(|y| norm(&sy.b_matrix.mul_vec(y)) <= T::one()).collect();
        for i in 0..config.k {
            miss_x[i] += usize::from(!covered_x[i]);
            miss_y[i] += usize::from(!covered_y[i]);
            exceed.0 += usize::from(norm(&bx[i]) >= radius);
            exceed.1 += usize::from(norm(&by[i]) >= radius);
            let xw = &d.x_white[i];
            for r in 0..n {
                for c in 0..n {
                    cov_sum[(r, c)] += xw[r] * xw[c];
                }
            }
            let err = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&p, &q)| (p - q) * (p - q)).sum::<T>();
            sq_err.0 += err(xw, &d.x_hat_white[i]);
            sq_err.1 += err(&d.y_white[i], &d.y_hat_white[i]);
        }
        reports.push(TrialReport {
            trial: t,
            norm_volume_x: norm_volume(sx.log_det_b, config.nu_x),
            norm_volume_y: norm_volume(sy.log_det_b, config.nu_y),
            covered_x,
            covered_y,
            rank_x: sx.rank,
            rank_y: sy.rank,
            residual_x: sx.residual,
            residual_y: sy.residual,
            implied_rates,
        });
    }

    let trials = T::of_usize(config.trials);
    let points = T::of_usize(config.trials * config.k);
    let mean = |f: &dyn Fn(&TrialReport<T>) -> T| reports.iter().map(f).sum::<T>() / trials;
    let worst = |m: &[usize]| T::of_usize(m.iter().copied().max().unwrap_or(0)) / trials;
    let whitening_error = cov_sum.scale(T::one() / points).sub(&Matrix::identity(n)).frobenius_norm() / nn;
    let residual_max = reports
        .iter()
        .map(|r| r.residual_x.max(r.residual_y))
        .fold(T::zero(), T::max);
    Ok(SimulationReport {
        config: ConfigEcho::of(config)?,
        coverage_x: mean(&|r| r.covered_x_frac()),
        coverage_y: mean(&|r| r.covered_y_frac()),
        max_point_failure_x: worst(&miss_x),
        max_point_failure_y: worst(&miss_y),
        mean_norm_vol_x: mean(&|r| r.norm_volume_x),
        mean_norm_vol_y: mean(&|r| r.norm_volume_y),
        implied_rates,
        region_inside: region.inside,
        region,
        residual_max,
        min_rank_x: reports.iter().map(|r| r.rank_x).min().unwrap_or(0),
        min_rank_y: reports.iter().map(|r| r.rank_y).min().unwrap_or(0),
        whitening_error,
        empirical_mse_x: sq_err.0 / (points * nn),
        empirical_mse_y: sq_err.1 / (points * nn),
        center_exceed_frac_x: T::of_usize(exceed.0) / points,
        center_exceed_frac_y: T::of_usize(exceed.1) / points,
        channel,
        trials: reports,
    })
}

/// Per-trial CSV with header `trial,covered_x_frac,covered_y_frac,normvol_x,normvol_y`.
pub fn trials_csv<T: Real>(trials: &[TrialReport<T>], precision: usize) -> String {
    let mut out = String::from("trial,covered_x_frac,covered_y_frac,normvol_x,normvol_y\n");
    for r in trials {
        out.push_str(&format!(
            "{},{:.p$},{:.p$},{:.p$},{:.p$}\n",
            r.trial,
            r.covered_x_frac().as_f64(),
            r.covered_y_frac().as_f64(),
            r.norm_volume_x.as_f64(),
            r.norm_volume_y.as_f64(),
            p = precision
        ));
    }
    out
}

/// Projector `Σ u_j u_jᵀ` onto the span of an orthonormal basis.
pub fn span_projector<T: Real>(basis: &[Vec<T>], n: usize) -> Matrix<T> {
    Matrix::from_fn(n, n, |i, j| basis.iter().map(|u| u[i] * u[j]).sum())
}

/// Mean squared error per coordinate of `estimates` against `truth`.
pub fn mean_squared_error<T: Real>(truth: &[Vec<T>], estimates: &[Vec<T>]) -> T {
    let total: T = truth
        .iter()
        .zip(estimates)
        .map(|(a, b)| {
            let d: Vec<T> = a.iter().zip(b).map(|(&p, &q)| p - q).collect();
            dot(&d, &d)
        })
        .sum();
    let count = truth.iter().map(Vec::len).sum::<usize>().max(1);
    total / T::of_usize(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_model::random_spd;
    use rand::SeedableRng;

    #[test]
    fn unit_ball_small_dimensions() {
        assert!((unit_ball_volume::<f64>(1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume::<f64>(2) - std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume::<f64>(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
        assert!(log_unit_ball_volume::<f64>(5000).is_finite());
    }

    #[test]
    fn stirling_error_shrinks() {
        let target = (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt();
        let errs: Vec<f64> = [64, 256, 1024, 4096]
            .iter()
            .map(|&n| (stirling_ratio::<f64>(n) - target).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        assert!(errs[3] <= 0.05);
        assert!((errs[0] - 0.168).abs() < 1e-3);
    }

    #[test]
    fn ellipsoid_volume_scaling_and_membership() {
        let e = Ellipsoid::new(Matrix::<f64>::identity(2), vec![0.0, 0.0]).unwrap();
        assert!((e.volume().unwrap() - std::f64::consts::PI).abs() < 1e-14);
        let e2 = Ellipsoid::new(Matrix::<f64>::identity(2).scale(2.0), vec![0.0, 0.0]).unwrap();
        assert!((e2.volume().unwrap() - std::f64::consts::PI / 4.0).abs() < 1e-14);
        assert!(e.contains(&[0.6, 0.8]));
        assert!(!e2.contains(&[0.6, 0.8]));
        let shifted = Ellipsoid::new(Matrix::<f64>::identity(2), vec![3.0, 0.0]).unwrap();
        assert!(shifted.contains(&[3.5, 0.0]) && !shifted.contains(&[0.0, 0.0]));
        assert!(Ellipsoid::new(Matrix::<f64>::identity(2), vec![0.0]).is_err());
        let singular = Ellipsoid::new(Matrix::<f64>::from_diagonal(&[1.0, 0.0]), vec![0.0, 0.0]).unwrap();
        assert!(singular.volume().is_err());
    }

    #[test]
    fn ellipsoid_volume_matches_hit_ratio() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let a: Matrix<f64> = random_spd(5, &mut rng);
        let b: Vec<f64> = vec![0.3, -0.2, 0.1, 0.0, 0.5];
        let e = Ellipsoid::new(a.clone(), b.clone()).unwrap();
        // x = A⁻¹(b + z), ‖z‖ ≤ 1: coordinate i spans ± ‖row_i(A⁻¹)‖ around (A⁻¹b)_i
        let inv = Cholesky::new(&a).unwrap().inverse();
        let center = inv.mul_vec(&b);
        let half: Vec<f64> = (0..5).map(|i| norm(inv.row(i))).collect();
        let box_vol: f64 = half.iter().map(|h| 2.0 * h).product();
        let samples = 1_000_000;
        let mut hits = 0usize;
        let mut x = vec![0.0; 5];
        for _ in 0..samples {
            for i in 0..5 {
                x[i] = center[i] + half[i] * (2.0 * rng.random::<f64>() - 1.0);
            }
            hits += usize::from(e.contains(&x));
        }
        let estimate = box_vol * hits as f64 / samples as f64;
        let exact = e.volume().unwrap();
        assert!((estimate / exact - 1.0).abs() < 0.05, "{estimate} vs {exact}");
    }

    #[test]
    fn volume_shrinks_when_matrix_scales() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let a: Matrix<f64> = random_spd(3, &mut rng);
        let e = Ellipsoid::new(a.clone(), vec![0.0; 3]).unwrap();
        let big = Ellipsoid::new(a.scale(1.5), vec![0.0; 3]).unwrap();
        assert!((e.log_volume().unwrap() - big.log_volume().unwrap() - 3.0 * 1.5f64.ln()).abs() < 1e-12);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            assert!(!big.contains(&x) || e.contains(&x));
        }
    }

    #[test]
    fn channel_hand_formula_when_independent() {
        let ch = DescriptionChannel::solve(0.0f64, 0.3, 0.6).unwrap();
        let (qx, qy) = ch.noise_variances();
        assert!((qx - 0.3 / 0.7).abs() < 1e-9);
        assert!((qy - 0.6 / 0.4).abs() < 1e-9);
    }

    #[test]
    fn channel_uninformative_limit() {
        let ch = DescriptionChannel::solve(0.5f64, 1.0, 1.0).unwrap();
        assert_eq!((ch.precision_x, ch.precision_y), (0.0, 0.0));
        let r = ch.implied_rates().unwrap();
        assert!(r.r_x <= 2e-9 && r.r_y <= 2e-9);
        let mut a = stream(0, 0, 1);
        let mut b = stream(0, 0, 2);
        let (xh, yh) = ch.describe(&[1.0, -2.0], &[0.5, 0.1], &mut a, &mut b);
        assert!(xh.iter().chain(&yh).all(|&v| v == 0.0));
    }

    #[test]
    fn channel_acceptance_point() {
        let ch = DescriptionChannel::solve(0.5f64, 0.25, 0.25).unwrap();
        assert!((ch.precision_x - 2.774_851_77).abs() < 1e-6);
        assert!((ch.precision_y - ch.precision_x).abs() < 1e-9);
        assert!((ch.mmse_x() - 0.25).abs() < 1e-12);
        let r = ch.implied_rates().unwrap();
        assert!((r.r_x - 0.905_865_922_2).abs() < 1e-8);
        let v = region_verdict(&RegionQuery {
            rho: 0.5,
            r_x: r.r_x,
            r_y: r.r_y,
            nu_x: 0.25,
            nu_y: 0.25,
        })
        .unwrap();
        assert!(v.inside);
        // without the slack the point sits on the sum-rate boundary
        assert!(v.slack_sum.abs() < 1e-8);
    }

    #[test]
    fn channel_rejects_unreachable_targets() {
        assert!(matches!(DescriptionChannel::solve(0.9f64, 1.0, 0.1), Err(Error::Infeasible(_))));
        assert!(matches!(DescriptionChannel::solve(0.5f64, 0.0, 0.5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn channel_property_sweep() {
        for &rho in &[0.0f64, 0.3, -0.6, 0.9] {
            for &nx in &[0.05, 0.2, 0.5, 0.9] {
                for &ny in &[0.05, 0.2, 0.5, 0.9] {
                    if let Ok(ch) = DescriptionChannel::solve(rho, nx, ny) {
                        assert!((ch.mmse_x() - nx).abs() < 1e-9 * nx);
                        assert!((ch.mmse_y() - ny).abs() < 1e-9 * ny);
                    } else {
                        // both targets unreachable only when one source is left almost undescribed
                        assert!(nx.max(ny) > 1.0 - rho * rho);
                    }
                }
            }
        }
    }

    #[test]
    fn empirical_mse_matches_target() {
        let ch = DescriptionChannel::solve(0.5f64, 0.3, 0.4).unwrap();
        let (mut rx, mut ry, mut ru, mut rv) = (stream(1, 0, 1), stream(1, 0, 2), stream(1, 0, 3), stream(1, 0, 4));
        let n = 10_000;
        let x: Vec<f64> = standard_normal_vec(n, &mut rx);
        let z: Vec<f64> = standard_normal_vec(n, &mut ry);
        let c = (1.0 - 0.25f64).sqrt();
        let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| 0.5 * a + c * b).collect();
        let (xh, yh) = ch.describe(&x, &y, &mut ru, &mut rv);
        let mx = mean_squared_error(&[x], &[xh]);
        let my = mean_squared_error(&[y], &[yh]);
        assert!((mx / 0.3 - 1.0).abs() < 0.02, "{mx}");
        assert!((my / 0.4 - 1.0).abs() < 0.02, "{my}");
    }

    #[test]
    fn shrunk_matrix_examples() {
        let a = Matrix::<f64>::identity(3);
        let s = build_shrunk_matrix(&a, &[vec![0.0; 3], vec![0.0; 3]], 0.01).unwrap();
        assert_eq!(s.rank, 0);
        assert!((s.log_det_b - 3.0 * 0.8f64.ln()).abs() < 1e-12);

        let s = build_shrunk_matrix(&a, &[vec![1.0, 2.0, 2.0]], 0.01).unwrap();
        assert_eq!(s.rank, 1);
        assert!((s.log_det_b.exp() - 0.00512).abs() < 1e-12);
        assert!(s.residual <= 1e-9);

        let p = span_projector(&s.basis, 3);
        assert!(p.matmul(&p).sub(&p).max_abs() <= 1e-12);
        assert!(matches!(
            build_shrunk_matrix(&a, &[vec![1.0; 3]], 0.3),
            Err(Error::DegenerateShrinkage { .. })
        ));
    }

    #[test]
    fn shrunk_matrix_rank_deficient_centers() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let a: Matrix<f64> = random_spd(6, &mut rng);
        let c1: Vec<f64> = standard_normal_vec(6, &mut rng);
        let c2: Vec<f64> = standard_normal_vec(6, &mut rng);
        let c3: Vec<f64> = c1.iter().zip(&c2).map(|(p, q)| 2.0 * p - q).collect();
        let s = build_shrunk_matrix(&a, &[c1, c2, c3], 0.0025).unwrap();
        assert_eq!(s.rank, 2);
        assert!(s.residual <= 1e-9);
    }

    #[test]
    fn config_validation() {
        let ok = CodecConfig::with_identity(8, 2, 0.5f64, 0.25, 0.25, 1, 0);
        assert!(ok.validate().is_ok());
        let mut c = ok.clone();
        c.k = 9;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let mut c = ok.clone();
        c.delta = 0.3;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.nu_x = 0.002;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.sigma = Matrix::identity(3);
        assert!(c.validate().is_err());
        let mut c = ok;
        c.sigma = Matrix::from_diagonal(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
        assert!(matches!(c.validate(), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn whitening_inverts() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let s: Matrix<f64> = random_spd(4, &mut rng);
        let w = Whitening::new(&s).unwrap();
        let id = w.forward.matmul(&s).matmul(&w.forward.transpose());
        assert!(id.sub(&Matrix::identity(4)).max_abs() < 1e-10);
        assert!(w.inverse.matmul(&w.forward).sub(&Matrix::identity(4)).max_abs() < 1e-10);
    }

    #[test]
    fn loose_targets_cover_easily() {
        let c = CodecConfig::with_identity(64, 2, 0.0f64, 0.99, 0.99, 200, 0);
        let r = run_simulation(&c).unwrap();
        // P(χ²_{n−k} ≤ n/τ²) with τ = 0.9
        assert!(r.coverage_x >= 0.90 && r.coverage_y >= 0.90, "{} {}", r.coverage_x, r.coverage_y);
        assert!((r.coverage_x - 0.9286).abs() < 0.05);
        assert!(r.region_inside);
        assert!(r.residual_max <= 1e-9);
    }

    #[test]
    fn simulation_is_deterministic_and_reports_sane_values() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(30);
        let mut c = CodecConfig::with_identity(12, 3, 0.6f64, 0.3, 0.4, 40, 9);
        c.sigma = random_spd(12, &mut rng);
        let a = run_simulation(&c).unwrap();
        let b = run_simulation(&c).unwrap();
        assert_eq!(a.trials, b.trials);
        assert_eq!(trials_csv(&a.trials, 12), trials_csv(&b.trials, 12));
        assert!(a.residual_max <= 1e-9);
        assert!(a.region_inside);
        assert!(a.trials.iter().all(|t| t.norm_volume_x.is_finite() && t.norm_volume_x > 0.0));
        assert!((a.empirical_mse_x / 0.3 - 1.0).abs() < 0.15);
        let csv = trials_csv(&a.trials, 4);
        assert!(csv.starts_with("trial,covered_x_frac,covered_y_frac,normvol_x,normvol_y\n"));
        assert_eq!(csv.lines().count(), 41);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn simulation_rejects_bad_targets() {
        let c = CodecConfig::with_identity(8, 2, 0.9f64, 1.0, 0.1, 2, 0);
        assert!(matches!(run_simulation(&c), Err(Error::Infeasible(_))));
    }
}
