//! Gap functionals for the long-Markov-chain inequalities and the dual
//! function `F(λ) = inf { I(X;U) − λI(Y;U) + I(Y;V|U) − λI(X;V|U) }`.
//!
//! Every gap is `LHS − RHS`, so the inequalities read `gap ≥ 0`. The scalar
//! dual function has a closed form; [`f_oracle_scalar`] recomputes it by brute
//! force over Gaussian auxiliaries for cross-checking.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::gauss_model::{
    log_det, mutual_information, scalar_info_squared, GaussianAuxChannel, GaussianPairModel, InfoVector, Side,
};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Real;

/// Which piece of a two-branch dual formula applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `λ` at or above the threshold (`1/ρ²`, or `1 + |Σ_X⁻¹Σ_Z|^{1/n}`).
    Active,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Exactness {
    Exact,
    LowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualValue<T> {
    pub lambda: T,
    pub value_bits: T,
    pub branch: Branch,
    pub exactness: Exactness,
}

/// A non-degenerate minimizing pair `U = ρ_u X + N(0, 1-ρ_u²)`,
/// `V = ρ_v Y + N(0, 1-ρ_v²)`; `alpha` is set for the vector family
/// `Σ_{X|U} = α·Σ_Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinimizerPair<T> {
    pub rho_u: T,
    pub rho_v: T,
    pub alpha: Option<T>,
}

impl<T: Real> MinimizerPair<T> {
    /// `(1−ρ²)(1−ρ²ρ_u²ρ_v²) − ρ²(λ−1)(1−ρ_u²)(1−ρ_v²)`; zero on the family.
    pub fn residual(&self, lambda: T, rho: T) -> T {
        let one = T::one();
        let (r2, u2, v2) = (rho * rho, self.rho_u * self.rho_u, self.rho_v * self.rho_v);
        (one - r2) * (one - r2 * u2 * v2) - r2 * (lambda - one) * (one - u2) * (one - v2)
    }

    pub fn channels(&self) -> Result<(GaussianAuxChannel<T>, GaussianAuxChannel<T>)> {
        Ok((
            GaussianAuxChannel::scalar(Side::OnX, self.rho_u)?,
            GaussianAuxChannel::scalar(Side::OnY, self.rho_v)?,
        ))
    }
}

fn exp2<T: Real>(x: T) -> T {
    x.exp2()
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return domain(format!("lambda must be finite and nonnegative, got {lambda}"));
    }
    Ok(())
}

fn check_rho<T: Real>(rho: T) -> Result<()> {
    if !(rho.abs() < T::one()) {
        return domain(format!("rho must lie in (-1, 1), got {rho}"));
    }
    Ok(())
}

/// Both forms of the vector inequality for one `(U, V)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Theorem1Gap<T> {
    /// `2^{−(2/n)(I(Y;U)+I(X;V|U))} − a·2^{−(2/n)(I(X;U)+I(Y;V|U))} − 2^{−(2/n)I(X;Y)}`.
    pub conditional_form: T,
    /// `2^{−(2/n)(I(Y;U)+I(X;V))} − a·2^{−(2/n)(I(X;U)+I(Y;V))} − 2^{−(2/n)(I(X;Y)+I(U;V))}`.
    pub pairwise_form: T,
    /// `|pairwise − 2^{−(2/n)I(U;V)}·conditional|`; the two forms are related
    /// through `I(X;V) = I(X;V|U) + I(U;V)` and its `Y` counterpart.
    pub form_residual: T,
}

/// Evaluates both forms; `a = |Σ_X|^{1/n}/|Σ_X+Σ_Z|^{1/n}` (`ρ²` for scalar models).
pub fn theorem1_gap_forms<T: Real>(
    model: &GaussianPairModel<T>,
    u: &GaussianAuxChannel<T>,
    v: &GaussianAuxChannel<T>,
) -> Result<Theorem1Gap<T>> {
    let info = mutual_information(model, u, v)?;
    let ratio = model.determinant_ratio()?;
    Ok(theorem1_from_info(&info, ratio, model.dim()))
}

pub(crate) fn theorem1_from_info<T: Real>(info: &InfoVector<T>, ratio: T, n: usize) -> Theorem1Gap<T> {
    let s = -T::lit(2.0) / T::of_usize(n);
    let conditional = exp2(s * (info.i_yu + info.i_xv_given_u))
        - ratio * exp2(s * (info.i_xu + info.i_yv_given_u))
        - exp2(s * info.i_xy);
    let pairwise = exp2(s * (info.i_yu + info.i_xv))
        - ratio * exp2(s * (info.i_xu + info.i_yv))
        - exp2(s * (info.i_xy + info.i_uv));
    Theorem1Gap {
        conditional_form: conditional,
        pairwise_form: pairwise,
        form_residual: (pairwise - exp2(s * info.i_uv) * conditional).abs(),
    }
}

/// Gap of the vector inequality in its conditional form.
pub fn theorem1_gap<T: Real>(
    model: &GaussianPairModel<T>,
    u: &GaussianAuxChannel<T>,
    v: &GaussianAuxChannel<T>,
) -> Result<T> {
    Ok(theorem1_gap_forms(model, u, v)?.conditional_form)
}

/// `2^{−2I(Y;U)}2^{−2I(X;V|U)} − (1−ρ²) − ρ²2^{−2I(X;U)}2^{−2I(Y;V|U)}`.
pub fn scalar_main_gap<T: Real>(rho: T, u: &GaussianAuxChannel<T>, v: &GaussianAuxChannel<T>) -> Result<T> {
    let model = GaussianPairModel::scalar(rho)?;
    let info = mutual_information(&model, u, v)?;
    Ok(scalar_main_gap_from_info(rho, &info))
}

pub(crate) fn scalar_main_gap_from_info<T: Real>(rho: T, info: &InfoVector<T>) -> T {
    let m2 = -T::lit(2.0);
    let r2 = rho * rho;
    exp2(m2 * info.i_yu) * exp2(m2 * info.i_xv_given_u)
        - (T::one() - r2)
        - r2 * exp2(m2 * info.i_xu) * exp2(m2 * info.i_yv_given_u)
}

/// One-auxiliary gap `2^{−2I(Y;U)/n} − a·2^{−2I(X;U)/n} − 2^{−2I(X;Y)/n}`.
pub fn oohama_gap<T: Real>(model: &GaussianPairModel<T>, u: &GaussianAuxChannel<T>) -> Result<T> {
    let info = mutual_information(model, u, &GaussianAuxChannel::degenerate(Side::OnY))?;
    let ratio = model.determinant_ratio()?;
    let s = -T::lit(2.0) / T::of_usize(model.dim());
    Ok(exp2(s * info.i_yu) - ratio * exp2(s * info.i_xu) - exp2(s * info.i_xy))
}

/// Closed-form scalar dual function.
///
/// For `λ ≥ 1/ρ²`: `½[log₂(ρ²(λ−1)/(1−ρ²)) − λ·log₂((λ−1)/(λ(1−ρ²)))]`, else 0.
pub fn f_closed_scalar<T: Real>(lambda: T, rho: T) -> Result<DualValue<T>> {
    check_lambda(lambda)?;
    check_rho(rho)?;
    let one = T::one();
    let r2 = rho * rho;
    let active = r2 > T::zero() && lambda * r2 >= one;
    let value_bits = if active {
        let lm1 = lambda - one;
        // F ≤ 0 exactly; clamp round-off at the branch point
        (T::lit(0.5) * ((r2 * lm1 / (one - r2)).log2() - lambda * (lm1 / (lambda * (one - r2))).log2())).min(T::zero())
    } else {
        T::zero()
    };
    Ok(DualValue {
        lambda,
        value_bits,
        branch: if active { Branch::Active } else { Branch::Zero },
        exactness: Exactness::Exact,
    })
}

/// `c` with `a = c·b` when the two matrices are proportional (relative
/// Frobenius tolerance `1e-10`).
pub fn proportionality<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Option<T> {
    let c = a.trace() / b.trace();
    let resid = a.sub(&b.scale(c)).frobenius_norm();
    (resid <= T::lit(1e-10) * a.frobenius_norm()).then_some(c)
}

/// `1 + |Σ_X⁻¹Σ_Z|^{1/n}`.
pub fn vector_threshold<T: Real>(sigma_x: &Matrix<T>, sigma_z: &Matrix<T>) -> Result<T> {
    let n = T::of_usize(sigma_x.rows());
    Ok(T::one() + ((log_det(sigma_z)? - log_det(sigma_x)?) / n).exp())
}

/// Lower bound on the vector dual function.
///
/// With `d_S = |S|^{1/n}` and `λ* = 1 + d_Z/d_X`: for `λ ≥ λ*`,
/// `(n/2)[log₂(d_X(λ−1)/d_Z) − λ·log₂(d_{X+Z}(λ−1)/(d_Zλ))]`; below it,
/// `−(λn/2)·log₂(d_{X+Z}/(d_X + d_Z))`.
///
/// The value is exact when `Σ_X ∝ Σ_Z`, and on the active branch whenever
/// the channel with `Σ_{X|U} = Σ_Z/(λ−1)` is realizable (`Σ_Z/(λ−1) < Σ_X`).
pub fn f_lower_vector<T: Real>(lambda: T, sigma_x: &Matrix<T>, sigma_z: &Matrix<T>) -> Result<DualValue<T>> {
    check_lambda(lambda)?;
    if !sigma_x.is_square() || sigma_x.rows() != sigma_z.rows() || sigma_x.cols() != sigma_z.cols() {
        return Err(Error::DimensionMismatch("sigma_x and sigma_z must be square of equal size".into()));
    }
    let n = T::of_usize(sigma_x.rows());
    let lx = log_det(sigma_x)? / n;
    let lz = log_det(sigma_z)? / n;
    let ly = log_det(&sigma_x.add(sigma_z))? / n;
    let one = T::one();
    let half_n = n * T::lit(0.5);
    let threshold = one + (lz - lx).exp();
    let proportional = proportionality(sigma_x, sigma_z).is_some();
    if lambda >= threshold {
        let lm1 = (lambda - one).ln();
        let value = (half_n * ((lx + lm1 - lz) - lambda * (ly + lm1 - lz - lambda.ln())).ln_to_bits()).min(T::zero());
        let alpha = one / (lambda - one);
        let realizable = Cholesky::new(&sigma_x.sub(&sigma_z.scale(alpha)).symmetrized()).is_ok();
        Ok(DualValue {
            lambda,
            value_bits: value,
            branch: Branch::Active,
            exactness: if proportional || realizable {
                Exactness::Exact
            } else {
                Exactness::LowerBound
            },
        })
    } else {
        let sum = lx.exp() + lz.exp();
        let value = -lambda * half_n * (ly - sum.ln()).ln_to_bits();
        Ok(DualValue {
            lambda,
            value_bits: value,
            branch: Branch::Zero,
            exactness: if proportional {
                Exactness::Exact
            } else {
                Exactness::LowerBound
            },
        })
    }
}

/// Channel on `X` with `Σ_{X|U} = α·Σ_Z` (vector models only).
pub fn alpha_family_channel<T: Real>(model: &GaussianPairModel<T>, alpha: T) -> Result<GaussianAuxChannel<T>> {
    match model {
        GaussianPairModel::Vector { sigma_x, sigma_z } => {
            if !(alpha > T::zero()) {
                return domain("alpha must be positive");
            }
            GaussianAuxChannel::for_conditional_cov(Side::OnX, sigma_x, &sigma_z.scale(alpha))
        }
        GaussianPairModel::Scalar { .. } => domain("the alpha family is defined on vector models"),
    }
}

/// Grid minimum of the dual functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleMinimum<T> {
    pub lambda: T,
    pub value: T,
    pub rho_u: T,
    pub rho_v: T,
}

/// Squared-correlation grid: `resolution` uniform points on `[0, 1 − 10⁻⁴]`
/// plus log-spaced points `1 − 10^{−e}`, `e ∈ (4, 10]`.
pub fn squared_correlation_grid<T: Real>(resolution: usize) -> Vec<T> {
    let top = 1.0 - 1e-4;
    let mut pts: Vec<f64> = (0..resolution)
        .map(|i| top * i as f64 / (resolution - 1) as f64)
        .collect();
    let refine = (resolution / 20).max(10);
    pts.extend((1..=refine).map(|j| 1.0 - 10f64.powf(-(4.0 + 6.0 * j as f64 / refine as f64))));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.into_iter().map(T::lit).collect()
}

/// Brute-force minimum of the dual functional over scalar Gaussian auxiliaries
/// `(ρ_u², ρ_v²)` on [`squared_correlation_grid`], for several `λ` at once.
///
/// Each cell's information terms come from the scalar closed forms in
/// [`crate::gauss_model`]; cells are scanned in increasing `(ρ_u², ρ_v²)` and
/// only strict improvements are kept, so ties resolve to the smaller pair.
pub fn f_oracle_scalar_many<T: Real>(lambdas: &[T], rho: T, grid_resolution: usize) -> Result<Vec<OracleMinimum<T>>> {
    check_rho(rho)?;
    for &l in lambdas {
        check_lambda(l)?;
    }
    if grid_resolution < 100 {
        return domain(format!("grid resolution must be at least 100, got {grid_resolution}"));
    }
    let grid = squared_correlation_grid::<T>(grid_resolution);
    let r2 = rho * rho;
    let mut best: Vec<(T, T, T)> = vec![(T::infinity(), T::zero(), T::zero()); lambdas.len()];
    for &u2 in &grid {
        for &v2 in &grid {
            let info = scalar_info_squared(r2, u2, v2);
            let gain = info.i_xu + info.i_yv_given_u;
            let loss = info.i_yu + info.i_xv_given_u;
            for (b, &l) in best.iter_mut().zip(lambdas) {
                let f = gain - l * loss;
                if f < b.0 {
                    *b = (f, u2, v2);
                }
            }
        }
    }
    Ok(best
        .into_iter()
        .zip(lambdas)
        .map(|((value, u2, v2), &lambda)| OracleMinimum {
            lambda,
            value,
            rho_u: u2.sqrt(),
            rho_v: v2.sqrt(),
        })
        .collect())
}

pub fn f_oracle_scalar<T: Real>(lambda: T, rho: T, grid_resolution: usize) -> Result<OracleMinimum<T>> {
    Ok(f_oracle_scalar_many(&[lambda], rho, grid_resolution)?[0])
}

/// Non-degenerate minimizers `(ρ_u, ρ_v)` solving
/// `(1−ρ²)(1−ρ²ρ_u²ρ_v²) = ρ²(λ−1)(1−ρ_u²)(1−ρ_v²)`.
///
/// `ρ_v` sweeps `i/count`, `i = 0..count`; the equation is linear in `ρ_u²`
/// and only roots in `[0, 1)` are kept. Below `λ = 1/ρ²` the family is empty.
pub fn remark_minimizers<T: Real>(lambda: T, rho: T, count: usize) -> Result<Vec<MinimizerPair<T>>> {
    check_lambda(lambda)?;
    check_rho(rho)?;
    if rho == T::zero() {
        return domain("rho must be nonzero");
    }
    let one = T::one();
    let r2 = rho * rho;
    if lambda * r2 < one {
        return Ok(Vec::new());
    }
    let lm1 = lambda - one;
    let mut out = Vec::new();
    for i in 0..count {
        let rho_v = T::of_usize(i) / T::of_usize(count);
        let v2 = rho_v * rho_v;
        let den = r2 * (lm1 * (one - v2) - (one - r2) * v2);
        let num = r2 * lm1 * (one - v2) - (one - r2);
        if !(den > T::zero()) {
            continue;
        }
        let mut u2 = num / den;
        if u2 < T::zero() && u2 > -T::lit(1e-12) {
            u2 = T::zero();
        }
        if u2 >= T::zero() && u2 < one {
            out.push(MinimizerPair {
                rho_u: u2.sqrt(),
                rho_v,
                alpha: None,
            });
        }
    }
    Ok(out)
}

/// `min_{t≥0} { max(f(t), 0) − λt }` for `f` defined by `2^{−2t} = a₁2^{−2f(t)} + a₂`.
pub fn calculus_min<T: Real>(a1: T, a2: T, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    if !(a1 > T::zero()) || !(a2 > T::zero()) {
        return domain("a1 and a2 must be positive");
    }
    let one = T::one();
    let s = a1 + a2;
    if s > one + T::lit(1e-12) {
        return domain(format!("a1 + a2 = {s} exceeds 1"));
    }
    let half = T::lit(0.5);
    if lambda >= s / a1 {
        let lm1 = lambda - one;
        Ok(half * (a1 * lm1 / a2).log2() - half * lambda * (lm1 / (a2 * lambda)).log2())
    } else {
        Ok(-half * lambda * (one / s).log2())
    }
}

/// `|A+B|^{1/n} − |A|^{1/n} − |B|^{1/n}`; nonnegative for PSD `A`, `B`.
pub fn minkowski_check<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<T> {
    if a.rows() != b.rows() || a.cols() != b.cols() || !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = T::of_usize(a.rows());
    let root = |m: &Matrix<T>| -> Result<T> { Ok((log_det(m)? / n).exp()) };
    Ok(root(&a.add(b))? - root(a)? - root(b)?)
}
