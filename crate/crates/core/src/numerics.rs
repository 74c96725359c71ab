//! Dense linear algebra: Moore-Penrose pseudo-inverse, numerical rank and
//! least-squares coefficients.
//!
//! Everything here is single-threaded and uses plain IEEE arithmetic in a
//! fixed loop order, so results are reproducible bit-for-bit on one platform.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("row-major buffer has {found} values, expected {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, found: usize },
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, values: Vec<T>) -> Result<Self, NumericsError> {
        if values.len() != rows * cols {
            return Err(NumericsError::BadShape { rows, cols, found: values.len() });
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a matrix from equal-length rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            values.extend_from_slice(r);
        }
        Self { rows: rows.len(), cols, values }
    }

    /// Builds a `rows x columns.len()` matrix whose j-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[&[T]]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column {j} has wrong length");
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>, NumericsError> {
        if v.len() != self.cols {
            return Err(NumericsError::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, values }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn check_finite(&self) -> Result<(), NumericsError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(NumericsError::NonFinite { row: p / self.cols.max(1), col: p % self.cols.max(1) }),
            None => Ok(()),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.values[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.values[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.values[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

/// Which algorithm produced a pseudo-inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinvRoute {
    /// `(A^T A)^-1 A^T` through an `LDL^T` factorization of the Gram matrix, refined once.
    Normal,
    /// Truncated SVD, used when the Gram matrix is not numerically positive definite.
    Svd,
}

/// Moore-Penrose pseudo-inverse.
///
/// Well-conditioned full-column-rank input goes through the normal equations; anything else
/// (including wide matrices) falls back to [`pseudo_inverse_svd`].
pub fn pseudo_inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>, NumericsError> {
    pseudo_inverse_with_route(a).map(|(m, _)| m)
}

pub fn pseudo_inverse_with_route<T: Scalar>(a: &Matrix<T>) -> Result<(Matrix<T>, PinvRoute), NumericsError> {
    a.check_finite()?;
    if a.cols <= a.rows {
        if let Some(p) = normal_equations_pinv(a) {
            return Ok((p, PinvRoute::Normal));
        }
    }
    Ok((svd_pinv_unchecked(a), PinvRoute::Svd))
}

/// Pseudo-inverse from the truncated SVD, with singular values below
/// `RANK_RTOL * sigma_max` treated as zero.
pub fn pseudo_inverse_svd<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>, NumericsError> {
    a.check_finite()?;
    Ok(svd_pinv_unchecked(a))
}

/// Numerical rank: the number of singular values above `RANK_RTOL * sigma_max`.
pub fn rank_of<T: Scalar>(a: &Matrix<T>) -> Result<usize, NumericsError> {
    a.check_finite()?;
    let sv = singular_values(a);
    let tol = truncation_threshold(&sv);
    Ok(sv.iter().filter(|&&s| s > tol).count())
}

/// Singular values in descending order.
pub fn singular_values<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    let mut sv = jacobi_svd(a).sigma;
    sv.sort_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
    sv
}

fn truncation_threshold<T: Scalar>(sv: &[T]) -> T {
    let smax = sv.iter().fold(T::zero(), |m, &s| m.max(s));
    smax * T::of(T::RANK_RTOL)
}

fn normal_equations_pinv<T: Scalar>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.cols;
    let m = a.rows;
    if n == 0 {
        return Some(Matrix::zeros(0, m));
    }
    // Gram matrix, upper triangle mirrored.
    let cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut gram = Matrix::zeros(n, n);
    for p in 0..n {
        for q in p..n {
            let s = dot(&cols[p], &cols[q]);
            gram[(p, q)] = s;
            gram[(q, p)] = s;
        }
    }
    let (l, d) = ldl(&gram)?;
    // Solve L D L^T X = A^T column by column of A^T (i.e. row by row of A).
    let mut pinv = Matrix::zeros(n, m);
    let mut y = vec![T::zero(); n];
    for col in 0..m {
        for i in 0..n {
            let mut s = a[(col, i)];
            for k in 0..i {
                s = s - l[(i, k)] * y[k];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i] / d[i];
            for k in i + 1..n {
                s = s - l[(k, i)] * pinv[(k, col)];
            }
            pinv[(i, col)] = s;
        }
    }
    Some(refine(a, pinv))
}

/// One Newton-Schulz step `X + (I - X A) X`. Squares the relative error of a
/// left inverse, undoing most of the conditioning lost to the normal
/// equations; exact inputs come back unchanged.
fn refine<T: Scalar>(a: &Matrix<T>, x: Matrix<T>) -> Matrix<T> {
    let mut r = x.matmul(a);
    for i in 0..r.rows {
        for j in 0..r.cols {
            let id = if i == j { T::one() } else { T::zero() };
            r[(i, j)] = id - r[(i, j)];
        }
    }
    if r.max_abs() == T::zero() {
        return x;
    }
    let dx = r.matmul(&x);
    let mut out = x;
    for (o, d) in out.values.iter_mut().zip(&dx.values) {
        *o = *o + *d;
    }
    out
}

/// Square-root-free Cholesky `G = L D L^T` with unit lower `L`, or `None`
/// when a pivot is not safely positive. Avoiding the square root keeps
/// small integer Gram matrices exact.
fn ldl<T: Scalar>(g: &Matrix<T>) -> Option<(Matrix<T>, Vec<T>)> {
    let n = g.rows;
    let max_diag = (0..n).fold(T::zero(), |m, i| m.max(g[(i, i)]));
    if max_diag <= T::zero() {
        return None;
    }
    // Normal equations square the condition number. Pivots below this mean
    // cond(A) beyond roughly 1e4 (f64), where the SVD route is more accurate.
    let floor = max_diag * T::of(T::RANK_RTOL * 1e2);
    let mut l = Matrix::identity(n);
    let mut d = vec![T::zero(); n];
    for j in 0..n {
        let mut dj = g[(j, j)];
        for k in 0..j {
            dj = dj - l[(j, k)] * l[(j, k)] * d[k];
        }
        if dj.is_nan() || dj <= floor {
            return None;
        }
        d[j] = dj;
        for i in j + 1..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = s / dj;
        }
    }
    Some((l, d))
}

struct Svd<T> {
    /// Left singular vectors as columns (`rows x k`), unnormalized columns zeroed.
    u: Matrix<T>,
    sigma: Vec<T>,
    /// Right singular vectors as columns (`cols x k`).
    v: Matrix<T>,
}

/// Thin SVD by one-sided Jacobi rotations. Works on the transpose for wide input.
fn jacobi_svd<T: Scalar>(a: &Matrix<T>) -> Svd<T> {
    if a.cols > a.rows {
        let t = jacobi_svd(&a.transpose());
        return Svd { u: t.v, sigma: t.sigma, v: t.u };
    }
    let (m, n) = (a.rows, a.cols);
    // Columns stored contiguously; the rotations only ever touch whole columns.
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v = Matrix::identity(n);
    // Rounding in a length-m dot product alone is of order m * eps; asking
    // for orthogonality beyond that never converges on long columns.
    let tol = T::epsilon() * T::from_usize(m.max(1)).expect("row count fits the scalar");
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let two = T::one() + T::one();
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (up, uq) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (x, y) = (*up, *uq);
                    *up = c * x - s * y;
                    *uq = s * x + c * y;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut u = Matrix::zeros(m, n);
    let mut sigma = Vec::with_capacity(n);
    for (j, col) in cols.iter().enumerate() {
        let s = norm2(col);
        if s > T::zero() {
            for i in 0..m {
                u[(i, j)] = col[i] / s;
            }
        }
        sigma.push(s);
    }
    Svd { u, sigma, v }
}

fn svd_pinv_unchecked<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let svd = jacobi_svd(a);
    let tol = truncation_threshold(&svd.sigma);
    let mut pinv = Matrix::zeros(a.cols, a.rows);
    for (k, &s) in svd.sigma.iter().enumerate() {
        if s <= tol {
            continue;
        }
        let inv = T::one() / s;
        for i in 0..a.cols {
            let vik = svd.v[(i, k)] * inv;
            if vik == T::zero() {
                continue;
            }
            for j in 0..a.rows {
                pinv[(i, j)] = pinv[(i, j)] + vik * svd.u[(j, k)];
            }
        }
    }
    pinv
}

/// Least-squares coefficients together with the fit residual.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares<T> {
    pub coefficients: Vec<T>,
    /// `||A x - v||_2`
    pub residual_norm: T,
}

/// Computes `x = A⁺ v` and the residual of the fit.
pub fn solve_coefficients<T: Scalar>(
    a: &Matrix<T>,
    a_pinv: &Matrix<T>,
    v: &[T],
) -> Result<LeastSquares<T>, NumericsError> {
    if v.len() != a.rows {
        return Err(NumericsError::DimensionMismatch { expected: a.rows, found: v.len() });
    }
    let coefficients = a_pinv.mul_vec(v)?;
    let fitted = a.mul_vec(&coefficients)?;
    let residual: Vec<T> = fitted.iter().zip(v).map(|(&f, &t)| f - t).collect();
    Ok(LeastSquares { residual_norm: norm2(&residual), coefficients })
}

/// Penrose-condition residuals of a candidate pseudo-inverse, as the largest
/// absolute elementwise deviation of each of the four identities.
pub fn penrose_residuals<T: Scalar>(a: &Matrix<T>, p: &Matrix<T>) -> [T; 4] {
    let ap = a.matmul(p);
    let pa = p.matmul(a);
    [
        ap.matmul(a).sub(a).max_abs(),
        pa.matmul(p).sub(p).max_abs(),
        ap.transpose().sub(&ap).max_abs(),
        pa.transpose().sub(&pa).max_abs(),
    ]
}
