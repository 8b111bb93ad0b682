//! Rate regions for two correlated unit-variance Gaussian sources: the
//! two-encoder quadratic Gaussian sum rate and the ellipsoid-compression
//! region, with membership tests and boundary tracing.
//!
//! Rates are in bits per dimension and distortions (`ν`) are normalized per
//! dimension. Only `ρ²` enters any formula, so the sign of `ρ` is irrelevant.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::gauss_model::InfoVector;
use crate::scalar::Real;

/// Slack at or above `-MEMBERSHIP_TOLERANCE` counts as satisfied.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-12;

fn check_rho<T: Real>(rho: T) -> Result<()> {
    if !(rho.abs() < T::one()) {
        return domain(format!("rho must lie in (-1, 1), got {rho}"));
    }
    Ok(())
}

fn check_rate<T: Real>(name: &str, r: T) -> Result<()> {
    if !(r >= T::zero()) || !r.is_finite() {
        return domain(format!("{name} must be finite and nonnegative, got {r}"));
    }
    Ok(())
}

fn check_positive<T: Real>(name: &str, x: T) -> Result<()> {
    if !(x > T::zero()) || !x.is_finite() {
        return domain(format!("{name} must be finite and positive, got {x}"));
    }
    Ok(())
}

fn half_log2<T: Real>(x: T) -> T {
    T::lit(0.5) * x.log2()
}

/// `β(z) = 1 + √(1 + 4ρ²z/(1−ρ²)²)`.
pub fn beta<T: Real>(rho: T, z: T) -> Result<T> {
    check_rho(rho)?;
    if !(z >= T::zero()) {
        return domain(format!("beta needs z >= 0, got {z}"));
    }
    let r2 = rho * rho;
    let d = T::one() - r2;
    Ok(T::one() + (T::one() + T::lit(4.0) * r2 * z / (d * d)).sqrt())
}

/// `½log₂((1−ρ²)β(d_x d_y)/(2 d_x d_y))` without clamping.
pub fn sum_rate_bound_unclamped<T: Real>(rho: T, d_x: T, d_y: T) -> Result<T> {
    check_positive("d_x", d_x)?;
    check_positive("d_y", d_y)?;
    let z = d_x * d_y;
    let b = beta(rho, z)?;
    Ok(half_log2((T::one() - rho * rho) * b / (T::lit(2.0) * z)))
}

/// Minimum sum rate for distortions `(d_x, d_y)`, clamped below at 0.
pub fn sum_rate_bound<T: Real>(rho: T, d_x: T, d_y: T) -> Result<T> {
    Ok(sum_rate_bound_unclamped(rho, d_x, d_y)?.max(T::zero()))
}

/// Distortion product achieved at sum rate `r`: `2^{−2r}(1−ρ² + ρ²2^{−2r})`.
pub fn distortion_of_sum_rate<T: Real>(rho: T, r: T) -> Result<T> {
    check_rho(rho)?;
    check_rate("rate", r)?;
    let e = (-T::lit(2.0) * r).exp2();
    let r2 = rho * rho;
    Ok(e * (T::one() - r2 + r2 * e))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionQuery<T> {
    pub rho: T,
    pub r_x: T,
    pub r_y: T,
    pub nu_x: T,
    pub nu_y: T,
}

impl<T: Real> RegionQuery<T> {
    pub fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        check_rate("r_x", self.r_x)?;
        check_rate("r_y", self.r_y)?;
        check_positive("nu_x", self.nu_x)?;
        check_positive("nu_y", self.nu_y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionVerdict<T> {
    pub satisfies_rx: bool,
    pub satisfies_ry: bool,
    pub satisfies_sum: bool,
    pub slack_rx: T,
    pub slack_ry: T,
    pub slack_sum: T,
    pub inside: bool,
}

/// Single-encoder bound `½log₂[(1/ν)(1−ρ² + ρ²2^{−2r_other})]`.
fn single_bound<T: Real>(r2: T, nu: T, r_other: T) -> T {
    half_log2((T::one() - r2 + r2 * (-T::lit(2.0) * r_other).exp2()) / nu)
}

/// Evaluates the three constraints of the ellipsoid-compression region.
pub fn region_verdict<T: Real>(q: &RegionQuery<T>) -> Result<RegionVerdict<T>> {
    q.validate()?;
    let r2 = q.rho * q.rho;
    let slack_rx = q.r_x - single_bound(r2, q.nu_x, q.r_y);
    let slack_ry = q.r_y - single_bound(r2, q.nu_y, q.r_x);
    let slack_sum = q.r_x + q.r_y - sum_rate_bound_unclamped(q.rho, q.nu_x, q.nu_y)?;
    let tol = -T::lit(MEMBERSHIP_TOLERANCE);
    let (satisfies_rx, satisfies_ry, satisfies_sum) = (slack_rx >= tol, slack_ry >= tol, slack_sum >= tol);
    Ok(RegionVerdict {
        satisfies_rx,
        satisfies_ry,
        satisfies_sum,
        slack_rx,
        slack_ry,
        slack_sum,
        inside: satisfies_rx && satisfies_ry && satisfies_sum,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NuBoundary<T> {
    pub nu_x_min: T,
    pub nu_y_min: T,
    pub sum_feasible: bool,
}

/// Smallest `ν_x`, `ν_y` allowed by the single-encoder constraints at rates
/// `(r_x, r_y)`, and whether that corner also meets the sum constraint.
pub fn min_nu_boundary<T: Real>(rho: T, r_x: T, r_y: T) -> Result<NuBoundary<T>> {
    check_rho(rho)?;
    check_rate("r_x", r_x)?;
    check_rate("r_y", r_y)?;
    let r2 = rho * rho;
    let m2 = -T::lit(2.0);
    let nu_x_min = (m2 * r_x).exp2() * (T::one() - r2 + r2 * (m2 * r_y).exp2());
    let nu_y_min = (m2 * r_y).exp2() * (T::one() - r2 + r2 * (m2 * r_x).exp2());
    let verdict = region_verdict(&RegionQuery {
        rho,
        r_x,
        r_y,
        nu_x: nu_x_min,
        nu_y: nu_y_min,
    })?;
    Ok(NuBoundary {
        nu_x_min,
        nu_y_min,
        sum_feasible: verdict.satisfies_sum,
    })
}

/// `(I(X;U,V) + I(Y;U,V))/n − ½log₂(1/(mmse_x·mmse_y))` for a whitened model;
/// nonnegative when the mmse values are the true per-dimension MMSEs.
pub fn mmse_jensen_gap<T: Real>(info: &InfoVector<T>, mmse_x: T, mmse_y: T, n: usize) -> Result<T> {
    check_positive("mmse_x", mmse_x)?;
    check_positive("mmse_y", mmse_y)?;
    if n == 0 {
        return domain("dimension must be positive");
    }
    Ok((info.i_x_uv + info.i_y_uv) / T::of_usize(n) + half_log2(mmse_x * mmse_y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_model::{
        mutual_information, posterior_covariances, GaussianAuxChannel, GaussianPairModel, Side,
    };

    fn q(rho: f64, r_x: f64, r_y: f64, nu_x: f64, nu_y: f64) -> RegionQuery<f64> {
        RegionQuery {
            rho,
            r_x,
            r_y,
            nu_x,
            nu_y,
        }
    }

    #[test]
    fn beta_values() {
        assert_eq!(beta(0.7f64, 0.0).unwrap(), 2.0);
        assert_eq!(beta(0.0f64, 123.0).unwrap(), 2.0);
        assert!((beta(0.5f64, 0.1).unwrap() - 2.085_254_706_406_647).abs() < 1e-14);
        assert!(beta(1.0f64, 0.1).is_err());
        assert!(beta(0.5f64, -0.1).is_err());
    }

    #[test]
    fn sum_rate_examples() {
        let v = sum_rate_bound(0.0f64, 0.25, 0.5).unwrap();
        assert!((v - 0.5 * (1.0f64 / 0.125).log2()).abs() < 1e-14);
        for rho in [0.0f64, 0.3, 0.8, -0.95] {
            // the log argument is exactly 1 here; only round-off survives
            assert!(sum_rate_bound_unclamped(rho, 1.0, 1.0).unwrap().abs() <= 1e-15);
            assert!(sum_rate_bound(rho, 1.0, 1.0).unwrap() <= 1e-15);
        }
        assert_eq!(sum_rate_bound(0.0f64, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(sum_rate_bound(0.3f64, 1.0, 1.5).unwrap(), 0.0);
        let v = sum_rate_bound(0.8f64, 0.1, 0.1).unwrap();
        assert!((v - 2.618_202_598_484_781_8).abs() < 1e-13);
        assert!(sum_rate_bound(0.5f64, 0.0, 0.5).is_err());
    }

    #[test]
    fn quadratic_round_trip() {
        for rho in [0.3f64, 0.9] {
            for i in 1..=50 {
                let r = 0.1 * i as f64;
                let d = distortion_of_sum_rate(rho, r).unwrap().sqrt();
                let back = sum_rate_bound(rho, d, d).unwrap();
                assert!((back - r).abs() <= 1e-12, "{rho} {r} {back}");
            }
        }
        assert_eq!(distortion_of_sum_rate(0.4f64, 0.0).unwrap(), 1.0);
        assert!((distortion_of_sum_rate(0.0f64, 1.5).unwrap() - 0.125).abs() < 1e-16);
    }

    #[test]
    fn verdict_examples() {
        let v = region_verdict(&q(0.0, 0.0, 0.0, 1.0, 1.0)).unwrap();
        assert!(v.inside);

        let (rho, rx, ry): (f64, f64, f64) = (0.6, 3.0, 2.5);
        let nu_x = (-2.0 * rx).exp2() * (1.0 - rho * rho + rho * rho * (-2.0 * ry).exp2());
        let v = region_verdict(&q(rho, rx, ry, nu_x, 0.5)).unwrap();
        assert!(v.satisfies_rx && v.slack_rx.abs() <= 1e-12);

        // extended-precision reference values
        let v = region_verdict(&q(0.5, 1.0, 1.0, 0.3, 0.3)).unwrap();
        assert!((v.slack_rx - 0.281_297_343_846_350_84).abs() < 1e-14);
        assert!((v.slack_ry - 0.281_297_343_846_350_84).abs() < 1e-14);
        assert!((v.slack_sum - 0.443_291_099_883_185_9).abs() < 1e-14);
        assert!(v.inside);

        assert!(!region_verdict(&q(0.5, 0.1, 0.1, 0.3, 0.3)).unwrap().inside);
        assert!(region_verdict(&q(1.5, 0.0, 0.0, 1.0, 1.0)).is_err());
        assert!(region_verdict(&q(0.5, -1.0, 0.0, 1.0, 1.0)).is_err());
        assert!(region_verdict(&q(0.5, 0.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn verdict_ignores_sign_of_rho() {
        for (rx, ry, nx, ny) in [(1.0, 1.0, 0.3, 0.3), (0.2, 0.9, 0.5, 0.4), (0.0, 0.0, 0.9, 0.9)] {
            assert_eq!(
                region_verdict(&q(0.7, rx, ry, nx, ny)).unwrap(),
                region_verdict(&q(-0.7, rx, ry, nx, ny)).unwrap()
            );
        }
    }

    #[test]
    fn boundary_examples() {
        let b = min_nu_boundary(0.0f64, 1.0, 2.0).unwrap();
        assert_eq!((b.nu_x_min, b.nu_y_min), (0.25, 0.0625));
        let b = min_nu_boundary(0.6f64, 1.5, 60.0).unwrap();
        assert!((b.nu_x_min - (-3.0f64).exp2() * 0.64).abs() <= 1e-9);
        for (rho, rx, ry) in [(0.5f64, 1.0, 1.0), (0.9, 0.3, 2.0), (-0.2, 4.0, 0.0)] {
            let b = min_nu_boundary(rho, rx, ry).unwrap();
            let v = region_verdict(&q(rho, rx, ry, b.nu_x_min, b.nu_y_min)).unwrap();
            assert!(v.satisfies_rx && v.satisfies_ry);
            assert!(v.slack_rx.abs() <= 1e-12 && v.slack_ry.abs() <= 1e-12);
            assert_eq!(b.sum_feasible, v.satisfies_sum);
        }
    }

    #[test]
    fn mmse_gap_examples() {
        let info = InfoVector::<f64>::default();
        assert_eq!(mmse_jensen_gap(&info, 1.0, 1.0, 1).unwrap(), 0.0);

        let model = GaussianPairModel::scalar(0.6f64).unwrap();
        let u = GaussianAuxChannel::scalar(Side::OnX, 0.7).unwrap();
        let v = GaussianAuxChannel::scalar(Side::OnY, 0.5).unwrap();
        let info = mutual_information(&model, &u, &v).unwrap();
        let (px, py) = posterior_covariances(&model, &u, &v).unwrap();
        let gap = mmse_jensen_gap(&info, px[(0, 0)], py[(0, 0)], 1).unwrap();
        assert!(gap.abs() <= 1e-12);
        let over = mmse_jensen_gap(&info, 2.0 * px[(0, 0)], py[(0, 0)], 1).unwrap();
        assert!((over - 0.5).abs() <= 1e-12);
    }
}
