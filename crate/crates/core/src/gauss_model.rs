//! Jointly Gaussian sources `(X, Y)`, linear-Gaussian auxiliary channels
//! `U = C·X + W`, `V = C'·Y + W'`, and exact mutual informations computed
//! from log-determinants of the joint covariance.
//!
//! All information quantities are in bits. Means are taken to be zero;
//! mutual information is translation invariant.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
pub use crate::linalg::log_det;
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Real;

/// Which source an auxiliary channel observes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    OnX,
    OnY,
}

/// Joint law of `(X, Y)`.
///
/// `Scalar`: unit-variance `X`, `Y = ρX + Z` with `Var(Z) = 1 - ρ²`.
/// `Vector`: `X ~ N(0, Σ_X)`, `Y = X + Z`, `Z ~ N(0, Σ_Z)` independent of `X`.
#[derive(Clone, Debug, PartialEq)]
pub enum GaussianPairModel<T> {
    Scalar { rho: T },
    Vector { sigma_x: Matrix<T>, sigma_z: Matrix<T> },
}

impl<T: Real> GaussianPairModel<T> {
    pub fn scalar(rho: T) -> Result<Self> {
        if !(rho.abs() < T::one()) {
            return domain(format!("correlation must lie in (-1, 1), got {rho}"));
        }
        Ok(Self::Scalar { rho })
    }

    pub fn vector(sigma_x: Matrix<T>, sigma_z: Matrix<T>) -> Result<Self> {
        let n = sigma_x.rows();
        if n == 0 || !sigma_x.is_square() || sigma_z.rows() != n || sigma_z.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "sigma_x is {}x{}, sigma_z is {}x{}",
                sigma_x.rows(),
                sigma_x.cols(),
                sigma_z.rows(),
                sigma_z.cols()
            )));
        }
        Cholesky::new(&sigma_x)?;
        Cholesky::new(&sigma_z)?;
        Ok(Self::Vector { sigma_x, sigma_z })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Scalar { .. } => 1,
            Self::Vector { sigma_x, .. } => sigma_x.rows(),
        }
    }

    pub fn cov_x(&self) -> Matrix<T> {
        match self {
            Self::Scalar { .. } => Matrix::scalar(T::one()),
            Self::Vector { sigma_x, .. } => sigma_x.clone(),
        }
    }

    /// `Σ_Y` (`Σ_X + Σ_Z` in vector form).
    pub fn cov_y(&self) -> Matrix<T> {
        match self {
            Self::Scalar { .. } => Matrix::scalar(T::one()),
            Self::Vector { sigma_x, sigma_z } => sigma_x.add(sigma_z),
        }
    }

    /// Cross-covariance `E[X·Yᵀ]`.
    pub fn cov_xy(&self) -> Matrix<T> {
        match self {
            Self::Scalar { rho } => Matrix::scalar(*rho),
            Self::Vector { sigma_x, .. } => sigma_x.clone(),
        }
    }

    /// `|Σ_X|^{1/n} / |Σ_X + Σ_Z|^{1/n}`; `ρ²` for the scalar form.
    pub fn determinant_ratio(&self) -> Result<T> {
        match self {
            Self::Scalar { rho } => Ok(*rho * *rho),
            Self::Vector { sigma_x, sigma_z } => {
                let n = T::of_usize(sigma_x.rows());
                let lx = log_det(sigma_x)?;
                let ly = log_det(&sigma_x.add(sigma_z))?;
                Ok(((lx - ly) / n).exp())
            }
        }
    }

    /// `I(X;Y)` in bits.
    pub fn xy_information(&self) -> Result<T> {
        match self {
            Self::Scalar { rho } => Ok(T::gaussian_mi_bits(*rho * *rho)),
            Self::Vector { sigma_x, sigma_z } => {
                let ly = log_det(&sigma_x.add(sigma_z))?;
                let lz = log_det(sigma_z)?;
                Ok((T::lit(0.5) * (ly - lz)).ln_to_bits())
            }
        }
    }

    /// Scalar form rewritten as `Y = X' + Z` with `X' = ρX`, so `Σ_X = ρ²`,
    /// `Σ_Z = 1 - ρ²`. Exact for `ρ ≠ 0`.
    pub fn embed_vector(&self) -> Result<Self> {
        match self {
            Self::Scalar { rho } => {
                if *rho == T::zero() {
                    return domain("the vector embedding needs rho != 0");
                }
                let r2 = *rho * *rho;
                Self::vector(Matrix::scalar(r2), Matrix::scalar(T::one() - r2))
            }
            Self::Vector { .. } => Ok(self.clone()),
        }
    }
}

/// `U = C·X + W` (or `V = C·Y + W`), `W ~ N(0, noise_cov)` independent of
/// everything else. A degenerate channel carries no information and is kept
/// out of joint covariances entirely.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianAuxChannel<T> {
    side: Side,
    gain: Matrix<T>,
    noise_cov: Matrix<T>,
    degenerate: bool,
}

impl<T: Real> GaussianAuxChannel<T> {
    pub fn new(side: Side, gain: Matrix<T>, noise_cov: Matrix<T>) -> Result<Self> {
        let m = gain.rows();
        if m == 0 || noise_cov.rows() != m || noise_cov.cols() != m {
            return Err(Error::DimensionMismatch(format!(
                "gain has {m} rows but noise covariance is {}x{}",
                noise_cov.rows(),
                noise_cov.cols()
            )));
        }
        if !gain.is_finite() {
            return domain("channel gain must be finite");
        }
        crate::linalg::check_symmetric(&noise_cov)?;
        Ok(Self {
            side,
            gain,
            noise_cov,
            degenerate: false,
        })
    }

    /// The constant channel.
    pub fn degenerate(side: Side) -> Self {
        Self {
            side,
            gain: Matrix::zeros(0, 0),
            noise_cov: Matrix::zeros(0, 0),
            degenerate: true,
        }
    }

    /// Unit-variance scalar channel `ρ_u·S + N(0, 1 - ρ_u²)`.
    pub fn scalar(side: Side, rho_u: T) -> Result<Self> {
        if !(rho_u.abs() < T::one()) {
            return domain(format!("channel correlation must lie in (-1, 1), got {rho_u}"));
        }
        Self::new(side, Matrix::scalar(rho_u), Matrix::scalar(T::one() - rho_u * rho_u))
    }

    /// Identity-gain channel whose posterior covariance of the source is `target`:
    /// `noise = (target⁻¹ - source_cov⁻¹)⁻¹`. Needs `target < source_cov`.
    pub fn for_conditional_cov(side: Side, source_cov: &Matrix<T>, target: &Matrix<T>) -> Result<Self> {
        let n = source_cov.rows();
        if target.rows() != n || target.cols() != n {
            return Err(Error::DimensionMismatch("target covariance shape".into()));
        }
        let src_inv = Cholesky::new(source_cov)?.inverse();
        let tgt_inv = Cholesky::new(target)?.inverse();
        let precision = tgt_inv.sub(&src_inv).symmetrized();
        let noise = Cholesky::new(&precision)
            .map_err(|_| {
                Error::Domain("target conditional covariance must be strictly below the source covariance".into())
            })?
            .inverse();
        Self::new(side, Matrix::identity(n), noise)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn gain(&self) -> &Matrix<T> {
        &self.gain
    }

    pub fn noise_cov(&self) -> &Matrix<T> {
        &self.noise_cov
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn output_dim(&self) -> usize {
        if self.degenerate {
            0
        } else {
            self.gain.rows()
        }
    }

    /// Rewrites a channel on the scalar model for the embedded vector model
    /// (`X' = ρX`), preserving every mutual information.
    pub fn embed_scalar(&self, rho: T) -> Result<Self> {
        if self.degenerate || self.side == Side::OnY {
            return Ok(self.clone());
        }
        if rho == T::zero() {
            return domain("the vector embedding needs rho != 0");
        }
        Self::new(self.side, self.gain.scale(T::one() / rho), self.noise_cov.clone())
    }

    fn check_for(&self, model: &GaussianPairModel<T>, expected: Side) -> Result<()> {
        if self.side != expected {
            return domain(format!(
                "channel reads {:?} but was passed as the {:?} auxiliary",
                self.side, expected
            ));
        }
        if !self.degenerate && self.gain.cols() != model.dim() {
            return Err(Error::DimensionMismatch(format!(
                "channel gain has {} columns, model dimension is {}",
                self.gain.cols(),
                model.dim()
            )));
        }
        Ok(())
    }
}

/// Mutual informations (bits) for a chain `U − X − Y − V`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct InfoVector<T> {
    pub i_xu: T,
    pub i_yu: T,
    pub i_xv: T,
    pub i_yv: T,
    pub i_xv_given_u: T,
    pub i_yv_given_u: T,
    pub i_uv: T,
    pub i_xy: T,
    pub i_x_uv: T,
    pub i_y_uv: T,
    pub i_xy_uv: T,
}

impl<T: Real> InfoVector<T> {
    /// `I(X;U) − λI(Y;U) + I(Y;V|U) − λI(X;V|U)`.
    pub fn dual_functional(&self, lambda: T) -> T {
        self.i_xu - lambda * self.i_yu + self.i_yv_given_u - lambda * self.i_xv_given_u
    }

    pub fn entries(&self) -> [T; 11] {
        [
            self.i_xu,
            self.i_yu,
            self.i_xv,
            self.i_yv,
            self.i_xv_given_u,
            self.i_yv_given_u,
            self.i_uv,
            self.i_xy,
            self.i_x_uv,
            self.i_y_uv,
            self.i_xy_uv,
        ]
    }
}

/// Conditional covariance `Σ_T − Σ_TG Σ_G⁻¹ Σ_GT`, symmetrized.
pub fn schur_conditional_cov<T: Real>(joint: &Matrix<T>, target: &[usize], given: &[usize]) -> Result<Matrix<T>> {
    let n = joint.rows();
    if !joint.is_square() || target.iter().chain(given).any(|&i| i >= n) {
        return Err(Error::DimensionMismatch("block indices out of range".into()));
    }
    let st = joint.principal(target);
    if given.is_empty() {
        return Ok(st.symmetrized());
    }
    let sg = Cholesky::new(&joint.principal(given))?;
    let stg = joint.submatrix(target, given);
    let correction = stg.matmul(&sg.solve(&stg.transpose()));
    Ok(st.sub(&correction).symmetrized())
}

/// Joint covariance of `(X, Y, U, V)` with degenerate channels omitted, plus
/// the index sets of each block.
struct JointCov<T> {
    cov: Matrix<T>,
    x: Vec<usize>,
    y: Vec<usize>,
    u: Vec<usize>,
    v: Vec<usize>,
}

fn joint_covariance<T: Real>(
    model: &GaussianPairModel<T>,
    u: &GaussianAuxChannel<T>,
    v: &GaussianAuxChannel<T>,
) -> JointCov<T> {
    let n = model.dim();
    let (sxx, syy, sxy) = (model.cov_x(), model.cov_y(), model.cov_xy());
    let syx = sxy.transpose();
    let mu = u.output_dim();
    let mv = v.output_dim();
    let total = 2 * n + mu + mv;
    let mut cov = Matrix::zeros(total, total);
    let x: Vec<usize> = (0..n).collect();
    let y: Vec<usize> = (n..2 * n).collect();
    let ui: Vec<usize> = (2 * n..2 * n + mu).collect();
    let vi: Vec<usize> = (2 * n + mu..total).collect();

    let mut put = |rows: &[usize], cols: &[usize], block: &Matrix<T>| {
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                cov[(i, j)] = block[(a, b)];
                cov[(j, i)] = block[(a, b)];
            }
        }
    };
    put(&x, &x, &sxx);
    put(&y, &y, &syy);
    put(&x, &y, &sxy);
    if mu > 0 {
        let cu = u.gain();
        let sux = cu.matmul(&sxx);
        let suy = cu.matmul(&sxy);
        let suu = sux.matmul(&cu.transpose()).add(u.noise_cov());
        put(&ui, &x, &sux);
        put(&ui, &y, &suy);
        put(&ui, &ui, &suu.symmetrized());
    }
    if mv > 0 {
        let cv = v.gain();
        let svx = cv.matmul(&syx);
        let svy = cv.matmul(&syy);
        let svv = svy.matmul(&cv.transpose()).add(v.noise_cov());
        put(&vi, &x, &svx);
        put(&vi, &y, &svy);
        put(&vi, &vi, &svv.symmetrized());
        if mu > 0 {
            let suv = u.gain().matmul(&sxy).matmul(&cv.transpose());
            put(&ui, &vi, &suv);
        }
    }
    JointCov { cov, x, y, u: ui, v: vi }
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().chain(b).copied().collect()
}

/// `I(A;B)` in bits from a covariance; zero when either block is empty.
fn block_mi<T: Real>(cov: &Matrix<T>, a: &[usize], b: &[usize]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Ok(T::zero());
    }
    let la = log_det(&cov.principal(a))?;
    let lb = log_det(&cov.principal(b))?;
    let lab = log_det(&cov.principal(&union(a, b)))?;
    Ok((T::lit(0.5) * (la + lb - lab)).ln_to_bits())
}

/// Every mutual information of the chain `U − X − Y − V`.
///
/// Unconditional terms come from `½log₂(|Σ_A||Σ_B|/|Σ_AB|)`; the two
/// conditional terms are evaluated on the Schur complement given `U`.
pub fn mutual_information<T: Real>(
    model: &GaussianPairModel<T>,
    u: &GaussianAuxChannel<T>,
    v: &GaussianAuxChannel<T>,
) -> Result<InfoVector<T>> {
    u.check_for(model, Side::OnX)?;
    v.check_for(model, Side::OnY)?;
    let j = joint_covariance(model, u, v);
    let cov = &j.cov;
    let uv = union(&j.u, &j.v);

    let (i_xv_given_u, i_yv_given_u) = if j.v.is_empty() {
        (T::zero(), T::zero())
    } else {
        // re-index the conditional covariance of (X, Y, V) given U
        let target = union(&union(&j.x, &j.y), &j.v);
        let cond = schur_conditional_cov(cov, &target, &j.u)?;
        let n = j.x.len();
        let cx: Vec<usize> = (0..n).collect();
        let cy: Vec<usize> = (n..2 * n).collect();
        let cv: Vec<usize> = (2 * n..target.len()).collect();
        (block_mi(&cond, &cx, &cv)?, block_mi(&cond, &cy, &cv)?)
    };

    Ok(InfoVector {
        i_xu: block_mi(cov, &j.x, &j.u)?,
        i_yu: block_mi(cov, &j.y, &j.u)?,
        i_xv: block_mi(cov, &j.x, &j.v)?,
        i_yv: block_mi(cov, &j.y, &j.v)?,
        i_xv_given_u,
        i_yv_given_u,
        i_uv: block_mi(cov, &j.u, &j.v)?,
        i_xy: block_mi(cov, &j.x, &j.y)?,
        i_x_uv: block_mi(cov, &j.x, &uv)?,
        i_y_uv: block_mi(cov, &j.y, &uv)?,
        i_xy_uv: block_mi(cov, &union(&j.x, &j.y), &uv)?,
    })
}

/// Conditional covariances of `X` and `Y` given `(U, V)`.
pub fn posterior_covariances<T: Real>(
    model: &GaussianPairModel<T>,
    u: &GaussianAuxChannel<T>,
    v: &GaussianAuxChannel<T>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    u.check_for(model, Side::OnX)?;
    v.check_for(model, Side::OnY)?;
    let j = joint_covariance(model, u, v);
    let uv = union(&j.u, &j.v);
    Ok((
        schur_conditional_cov(&j.cov, &j.x, &uv)?,
        schur_conditional_cov(&j.cov, &j.y, &uv)?,
    ))
}

/// Closed-form [`InfoVector`] for the scalar model with unit-variance channels
/// `U = ρ_u X + N(0, 1-ρ_u²)`, `V = ρ_v Y + N(0, 1-ρ_v²)`, parameterized by
/// squared correlations. No validation; inputs must lie in `[0, 1)`.
pub fn scalar_info_squared<T: Real>(rho_sq: T, ru_sq: T, rv_sq: T) -> InfoVector<T> {
    let one = T::one();
    let mi = T::gaussian_mi_bits;
    let ruv = rho_sq * ru_sq * rv_sq;
    // conditional on U: Var(X|U) = 1 - ρ_u², Var(Y|U) = 1 - ρ²ρ_u², Var(V|U) = 1 - ρ²ρ_u²ρ_v²
    let var_x_u = one - ru_sq;
    let var_y_u = one - rho_sq * ru_sq;
    let var_v_u = one - ruv;
    let c_xv_u = rho_sq * rv_sq * var_x_u / var_v_u;
    let c_yv_u = rv_sq * var_y_u / var_v_u;
    let half_bits = |x: T| -x.ln() / (T::lit(2.0) * T::LN_2());
    InfoVector {
        i_xu: mi(ru_sq),
        i_yu: mi(rho_sq * ru_sq),
        i_xv: mi(rho_sq * rv_sq),
        i_yv: mi(rv_sq),
        i_xv_given_u: mi(c_xv_u),
        i_yv_given_u: mi(c_yv_u),
        i_uv: mi(ruv),
        i_xy: mi(rho_sq),
        i_x_uv: half_bits(var_x_u * (one - c_xv_u)),
        i_y_uv: half_bits(var_y_u * (one - c_yv_u)),
        i_xy_uv: -half_bits(var_v_u / ((one - ru_sq) * (one - rv_sq))),
    }
}

/// Validated wrapper over [`scalar_info_squared`].
pub fn scalar_channel_info<T: Real>(rho: T, rho_u: T, rho_v: T) -> Result<InfoVector<T>> {
    for (name, c) in [("rho", rho), ("rho_u", rho_u), ("rho_v", rho_v)] {
        if !(c.abs() < T::one()) {
            return domain(format!("{name} must lie in (-1, 1), got {c}"));
        }
    }
    Ok(scalar_info_squared(rho * rho, rho_u * rho_u, rho_v * rho_v))
}

/// `A·Aᵀ + 0.1·I` with standard normal `A`.
pub fn random_spd<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix<T>
where
    StandardNormal: Distribution<T>,
{
    let a = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    a.matmul(&a.transpose())
        .add(&Matrix::identity(n).scale(T::lit(0.1)))
        .symmetrized()
}

/// Random non-degenerate channel: `m × n` standard normal gain with
/// `B·Bᵀ + 0.1·I` noise, `m` uniform in `1..=n`.
pub fn random_channel<T: Real, R: Rng + ?Sized>(side: Side, n: usize, rng: &mut R) -> GaussianAuxChannel<T>
where
    StandardNormal: Distribution<T>,
{
    let m = rng.random_range(1..=n);
    let gain = Matrix::from_fn(m, n, |_, _| StandardNormal.sample(rng));
    let noise = random_spd(m, rng);
    GaussianAuxChannel::new(side, gain, noise).expect("well-formed random channel")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(x: f64) -> f64 {
        x / std::f64::consts::LN_2
    }

    #[test]
    fn log_det_trivial_cases() {
        assert_eq!(log_det(&Matrix::<f64>::identity(3)).unwrap(), 0.0);
        let d = Matrix::from_diagonal(&[2.0, 2.0]);
        assert!((log_det(&d).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_channels_give_zero_aux_information() {
        let m = GaussianPairModel::scalar(0.5).unwrap();
        let u = GaussianAuxChannel::degenerate(Side::OnX);
        let v = GaussianAuxChannel::degenerate(Side::OnY);
        let info = mutual_information(&m, &u, &v).unwrap();
        let expect_xy = 0.5 * (1.0f64 / 0.75).log2();
        assert!((info.i_xy - expect_xy).abs() < 1e-15);
        for (k, e) in info.entries().iter().enumerate() {
            if k != 7 {
                assert_eq!(*e, 0.0, "entry {k}");
            }
        }
    }

    #[test]
    fn scalar_channel_closed_form() {
        let m = GaussianPairModel::scalar(0.5).unwrap();
        let u = GaussianAuxChannel::scalar(Side::OnX, 0.5f64.sqrt()).unwrap();
        let v = GaussianAuxChannel::degenerate(Side::OnY);
        let info = mutual_information(&m, &u, &v).unwrap();
        assert!((info.i_xu - 0.5).abs() < 1e-14);
        assert!((info.i_yu + 0.5 * 0.875f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn noiseless_identity_channel_is_rejected() {
        let m = GaussianPairModel::scalar(0.3).unwrap();
        let u = GaussianAuxChannel::new(Side::OnX, Matrix::scalar(1.0), Matrix::scalar(0.0)).unwrap();
        let v = GaussianAuxChannel::degenerate(Side::OnY);
        assert!(matches!(
            mutual_information(&m, &u, &v),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn information_grows_as_noise_vanishes() {
        let m = GaussianPairModel::scalar(0.3).unwrap();
        let v = GaussianAuxChannel::degenerate(Side::OnY);
        let mut last = -1.0;
        for k in 1..8 {
            let eps = 10f64.powi(-k);
            let u = GaussianAuxChannel::new(Side::OnX, Matrix::scalar(1.0), Matrix::scalar(eps)).unwrap();
            let i = mutual_information(&m, &u, &v).unwrap().i_xu;
            assert!(i > last);
            last = i;
        }
        assert!(last > 10.0);
    }

    #[test]
    fn wrong_sides_rejected() {
        let m = GaussianPairModel::scalar(0.3).unwrap();
        let u = GaussianAuxChannel::scalar(Side::OnY, 0.2).unwrap();
        let v = GaussianAuxChannel::degenerate(Side::OnY);
        assert!(matches!(mutual_information(&m, &u, &v), Err(Error::Domain(_))));
    }

    #[test]
    fn schur_examples() {
        // independent blocks
        let j = Matrix::from_diagonal(&[2.0, 3.0]);
        let c = schur_conditional_cov(&j, &[0], &[1]).unwrap();
        assert_eq!(c[(0, 0)], 2.0);

        // Var(X|U) for U = ρ_u X + N(0, 1 - ρ_u²): 2×2 hand inversion gives 1 - ρ_u²
        let ru: f64 = 0.6;
        let j = Matrix::from_rows(&[vec![1.0, ru], vec![ru, 1.0]]).unwrap();
        let c = schur_conditional_cov(&j, &[0], &[1]).unwrap();
        assert!((c[(0, 0)] - (1.0 - ru * ru)).abs() < 1e-15);

        // identity blocks with cross-covariance 0.5·I
        let mut j = Matrix::<f64>::identity(4);
        j[(0, 2)] = 0.5;
        j[(2, 0)] = 0.5;
        j[(1, 3)] = 0.5;
        j[(3, 1)] = 0.5;
        let c = schur_conditional_cov(&j, &[0, 1], &[2, 3]).unwrap();
        assert!(c.sub(&Matrix::identity(2).scale(0.75)).max_abs() < 1e-15);
    }

    #[test]
    fn fast_scalar_path_matches_log_det_path() {
        for &(rho, ru, rv) in &[(0.5f64, 0.3f64, 0.8f64), (-0.9, 0.95, 0.1), (0.0, 0.5, 0.5), (0.7, 0.0, 0.6)] {
            let m = GaussianPairModel::scalar(rho).unwrap();
            let u = GaussianAuxChannel::scalar(Side::OnX, ru).unwrap();
            let v = GaussianAuxChannel::scalar(Side::OnY, rv).unwrap();
            let slow = mutual_information(&m, &u, &v).unwrap();
            let fast = scalar_channel_info(rho, ru, rv).unwrap();
            for (a, b) in slow.entries().iter().zip(fast.entries()) {
                assert!((a - b).abs() < 1e-12, "{slow:?} vs {fast:?}");
            }
        }
    }

    #[test]
    fn embedding_preserves_information() {
        let rho: f64 = -0.6;
        let m = GaussianPairModel::scalar(rho).unwrap();
        let u = GaussianAuxChannel::scalar(Side::OnX, 0.7).unwrap();
        let v = GaussianAuxChannel::scalar(Side::OnY, 0.4).unwrap();
        let a = mutual_information(&m, &u, &v).unwrap();
        let mv = m.embed_vector().unwrap();
        let b = mutual_information(&mv, &u.embed_scalar(rho).unwrap(), &v.embed_scalar(rho).unwrap()).unwrap();
        for (x, y) in a.entries().iter().zip(b.entries()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((mv.determinant_ratio().unwrap() - 0.36).abs() < 1e-15);
        assert!(GaussianPairModel::scalar(0.0).unwrap().embed_vector().is_err());
    }

    #[test]
    fn conditional_cov_channel_hits_target() {
        let sx = Matrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let target = Matrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.4]]).unwrap();
        let ch = GaussianAuxChannel::for_conditional_cov(Side::OnX, &sx, &target).unwrap();
        let m = GaussianPairModel::vector(sx.clone(), Matrix::identity(2)).unwrap();
        let (px, _) = posterior_covariances(&m, &ch, &GaussianAuxChannel::degenerate(Side::OnY)).unwrap();
        assert!(px.sub(&target).max_abs() < 1e-13);
        // I(X;U) = ½log(|Σ_X|/|Σ_X|U|)
        let info = mutual_information(&m, &ch, &GaussianAuxChannel::degenerate(Side::OnY)).unwrap();
        let expect = bits(0.5 * (log_det(&sx).unwrap() - log_det(&target).unwrap()));
        assert!((info.i_xu - expect).abs() < 1e-12);
        // target above the prior is impossible
        assert!(GaussianAuxChannel::for_conditional_cov(Side::OnX, &sx, &sx.scale(1.1)).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(GaussianPairModel::<f64>::scalar(1.0).is_err());
        assert!(GaussianPairModel::<f64>::scalar(f64::NAN).is_err());
        let bad = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(GaussianPairModel::vector(bad, Matrix::identity(2)).is_err());
        assert!(GaussianPairModel::vector(Matrix::<f64>::identity(2), Matrix::identity(3)).is_err());
    }
}
