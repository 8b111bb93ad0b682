//! Dense row-major matrices and the factorizations the crate needs:
//! Cholesky with a trace-relative pivot rule, LU log-determinants,
//! cyclic Jacobi eigendecomposition and pivoted Gram-Schmidt.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Cholesky pivots must exceed this multiple of `trace / n`.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Relative symmetry tolerance for matrices handed to symmetric routines
/// (widened to a few ulps for `f32`).
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// 1×1 matrix.
    pub fn scalar(x: T) -> Self {
        Self::from_diagonal(&[x])
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product. Panics on incompatible shapes.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "mul_vec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)]) * half)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn principal(&self, idx: &[usize]) -> Self {
        self.submatrix(idx, idx)
    }

    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&x| U::from_f64(x.as_f64()).expect("finite"))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Rejects non-square or asymmetric input (relative to the largest entry).
pub fn check_symmetric<T: Real>(m: &Matrix<T>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let rel = T::lit(SYMMETRY_TOLERANCE).max(T::lit(64.0) * T::epsilon());
    let allowed = rel * m.max_abs();
    let deviation = m.asymmetry();
    if deviation > allowed || !m.is_finite() {
        return Err(Error::NotSymmetric {
            deviation: deviation.as_f64(),
            allowed: allowed.as_f64(),
        });
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `A = L·Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factorizes a symmetric matrix. A pivot `≤ PIVOT_TOLERANCE · trace / n`
    /// is reported as [`Error::NotPositiveDefinite`]; nothing is regularized.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        check_symmetric(a)?;
        let n = a.rows();
        let threshold = T::lit(PIVOT_TOLERANCE) * a.trace() / T::of_usize(n.max(1));
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > threshold) || threshold <= T::zero() {
                return Err(Error::NotPositiveDefinite {
                    index: j,
                    pivot: d.as_f64(),
                    threshold: threshold.as_f64(),
                });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Natural log-determinant, `2·Σ log L_ii`.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.dim()).map(|i| two * self.l[(i, i)].ln()).sum()
    }

    /// `L·x`.
    pub fn lower_mul(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| dot(&self.l.row(i)[..=i], &x[..=i]))
            .collect()
    }

    /// Solves `A·x = b`.
    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = (y[i] - s) / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `A·X = B` column by column.
    pub fn solve(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn inverse(&self) -> Matrix<T> {
        self.solve(&Matrix::identity(self.dim())).symmetrized()
    }
}

/// Natural log-determinant of a symmetric positive-definite matrix via Cholesky.
pub fn log_det<T: Real>(a: &Matrix<T>) -> Result<T> {
    Ok(Cholesky::new(a)?.log_det())
}

/// `log |det A|` for a general square matrix by LU with partial pivoting.
pub fn lu_log_abs_det<T: Real>(a: &Matrix<T>) -> Result<T> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("LU needs a square matrix".into()));
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut acc = T::zero();
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot == T::zero() || !pivot.is_finite() {
            return Err(Error::Singular);
        }
        if p != k {
            for j in 0..n {
                m.data.swap(k * n + j, p * n + j);
            }
        }
        let pkk = m[(k, k)];
        acc += pkk.abs().ln();
        for i in (k + 1)..n {
            let f = m[(i, k)] / pkk;
            if f == T::zero() {
                continue;
            }
            for j in (k + 1)..n {
                let v = m[(k, j)];
                m[(i, j)] -= f * v;
            }
        }
    }
    Ok(acc)
}

/// Eigendecomposition `A = V·diag(values)·Vᵀ` with eigenvectors as columns of `V`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> SymmetricEigen<T> {
    /// Cyclic Jacobi rotations until the off-diagonal mass is at round-off level.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        check_symmetric(a)?;
        let n = a.rows();
        let mut m = a.symmetrized();
        let mut v = Matrix::identity(n);
        let scale = m.frobenius_norm();
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let mut off = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[(p, q)] * m[(p, q)];
                }
            }
            if off.sqrt() <= eps * eps.sqrt() * scale || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let (app, aqq) = (m[(p, p)], m[(q, q)]);
                    if apq.abs() <= eps * T::lit(1e-3) * (app.abs() * aqq.abs()).sqrt() {
                        m[(p, q)] = T::zero();
                        m[(q, p)] = T::zero();
                        continue;
                    }
                    let theta = (aqq - app) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let t = if t.is_finite() { t } else { T::zero() };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (m[(k, p)], m[(k, q)]);
                        m[(k, p)] = c * akp - s * akq;
                        m[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (m[(p, k)], m[(q, k)]);
                        m[(p, k)] = c * apk - s * aqk;
                        m[(q, k)] = s * apk + c * aqk;
                    }
                    m[(p, q)] = T::zero();
                    m[(q, p)] = T::zero();
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let values = (0..n).map(|i| m[(i, i)]).collect();
        Ok(Self { values, vectors: v })
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |a, &b| a.max(b))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().fold(T::infinity(), |a, &b| a.min(b))
    }
}

/// Orthonormal basis of `span{vectors}` by Gram-Schmidt with column pivoting.
///
/// At each step the remaining vector with the largest residual is taken; the
/// process stops once every residual norm is `≤ rank_tol`.
pub fn orthonormal_span<T: Real>(vectors: &[Vec<T>], rank_tol: T) -> Vec<Vec<T>> {
    let mut residuals: Vec<Vec<T>> = vectors.to_vec();
    let mut basis: Vec<Vec<T>> = Vec::new();
    while !residuals.is_empty() {
        let (j, best) = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, norm(r)))
            .fold((0, T::neg_infinity()), |b, c| if c.1 > b.1 { c } else { b });
        if !(best > rank_tol) {
            break;
        }
        let mut q = residuals.swap_remove(j);
        // second pass restores orthogonality lost to cancellation
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &q);
                q.iter_mut().zip(b).for_each(|(x, &y)| *x -= c * y);
            }
        }
        let nq = norm(&q);
        if !(nq > rank_tol) {
            continue;
        }
        q.iter_mut().for_each(|x| *x /= nq);
        for r in residuals.iter_mut() {
            let c = dot(&q, r);
            r.iter_mut().zip(&q).for_each(|(x, &y)| *x -= c * y);
        }
        basis.push(q);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd3() -> Matrix<f64> {
        Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap()
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd3();
        let ch = Cholesky::new(&a).unwrap();
        let l = ch.factor();
        let back = l.matmul(&l.transpose());
        assert!(back.sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_semidefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            Cholesky::new(&a),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn cholesky_pivot_rule_is_trace_relative() {
        // second pivot 1e-11 against trace/n ~ 0.5: rejected
        let a = Matrix::from_diagonal(&[1.0, 1e-11]);
        assert!(Cholesky::new(&a).is_err());
        let b = Matrix::from_diagonal(&[1.0, 1e-9]);
        assert!(Cholesky::new(&b).is_ok());
    }

    #[test]
    fn asymmetric_input_rejected() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.1, 2.0]]).unwrap();
        assert!(matches!(log_det(&a), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn solve_and_inverse() {
        let a = spd3();
        let inv = Cholesky::new(&a).unwrap().inverse();
        assert!(a.matmul(&inv).sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn lu_matches_cholesky_on_spd() {
        let a = spd3();
        assert!((lu_log_abs_det(&a).unwrap() - log_det(&a).unwrap()).abs() < 1e-13);
        let perm = Matrix::from_rows(&[vec![0.0, 2.0], vec![3.0, 0.0]]).unwrap();
        assert!((lu_log_abs_det(&perm).unwrap() - 6f64.ln()).abs() < 1e-15);
        let sing = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(lu_log_abs_det(&sing), Err(Error::Singular));
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = spd3();
        let e = SymmetricEigen::new(&a).unwrap();
        let d = Matrix::from_diagonal(&e.values);
        let back = e.vectors.matmul(&d).matmul(&e.vectors.transpose());
        assert!(back.sub(&a).max_abs() < 1e-13);
        let vtv = e.vectors.transpose().matmul(&e.vectors);
        assert!(vtv.sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn span_detects_rank() {
        let v: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.0, 0.0],
        ];
        let basis = orthonormal_span(&v, 1e-10 * 2.0);
        assert_eq!(basis.len(), 2);
        assert!(dot(&basis[0], &basis[1]).abs() < 1e-15);
        assert!(orthonormal_span(&[vec![0.0f64; 3]], 0.0).is_empty());
    }

    #[test]
    fn generic_over_f32() {
        let a: Matrix<f32> = spd3().cast();
        let ld = log_det(&a).unwrap();
        assert!((ld as f64 - log_det(&spd3()).unwrap()).abs() < 1e-5);
    }
}
