//! Dense linear algebra for small problems.
//!
//! Only what the rest of the crate needs: a row-major [`Matrix`], a
//! Cholesky factorization with an SPD solver, and least squares through a
//! Householder QR with column pivoting so that rank-deficient designs fit
//! onto their column space instead of failing.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense matrix in row-major order.
///
/// A matrix may have zero columns (the design of an empty model) but always
/// has at least one row.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::DimensionMismatch(
                "matrix needs at least one row".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a matrix from equally long columns.
    pub fn from_columns(nrows: usize, columns: &[Vec<T>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != nrows) {
            return Err(Error::DimensionMismatch(
                "column length differs from row count".into(),
            ));
        }
        let cols = columns.len();
        let mut data = Vec::with_capacity(nrows * cols);
        for i in 0..nrows {
            data.extend(columns.iter().map(|c| c[i]));
        }
        Self::new(nrows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0, "matrix needs at least one row");
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Panics on a zero-column matrix, whose transpose has no rows.
    pub fn transpose(&self) -> Self {
        assert!(self.cols > 0, "transpose of a zero-column matrix");
        let data = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(l, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect())
    }

    /// Cross-product `selfᵀ·self`.
    pub fn gram(&self) -> Self {
        let k = self.cols;
        let mut g = Self {
            rows: k.max(1),
            cols: k,
            data: vec![T::zero(); k.max(1) * k],
        };
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..k {
                for j in i..k {
                    let v = g.get(i, j) + row[i] * row[j];
                    g.set(i, j, v);
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                let v = g.get(j, i);
                g.set(i, j, v);
            }
        }
        g
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Symmetric within `tol` relative to the largest entry.
    pub fn is_symmetric(&self, tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(T::min_positive_value());
        (0..self.rows)
            .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol * scale))
    }

    /// Returns a copy with `delta` added to every diagonal entry.
    pub fn with_diagonal_shift(&self, delta: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            let v = m.get(i, i) + delta;
            m.set(i, i, v);
        }
        m
    }
}

fn symmetry_tolerance<T: Real>() -> T {
    T::tolerance() * T::lit(1e-2)
}

/// Lower-triangular `L` with `L·Lᵀ = a`.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "cholesky needs a square matrix".into(),
        ));
    }
    if !a.is_symmetric(symmetry_tolerance()) {
        return Err(Error::DimensionMismatch(
            "cholesky needs a symmetric matrix".into(),
        ));
    }
    let n = a.rows;
    let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a.get(i, i).abs()));
    let floor = T::tolerance() * max_diag;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for p in 0..j {
            d = d - l.get(j, p) * l.get(j, p);
        }
        if d <= floor || max_diag == T::zero() {
            return Err(Error::NotPositiveDefinite {
                index: j,
                pivot: d.to_f64().unwrap_or(f64::NAN),
            });
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for p in 0..j {
                s = s - l.get(i, p) * l.get(j, p);
            }
            l.set(i, j, s / djj);
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ·x = b` given the Cholesky factor.
pub fn cholesky_solve<T: Real>(l: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = l.rows;
    if b.len() != n {
        return Err(Error::DimensionMismatch("right-hand side length".into()));
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for p in 0..i {
            s = s - l.get(i, p) * y[p];
        }
        y[i] = s / l.get(i, i);
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for p in (i + 1)..n {
            s = s - l.get(p, i) * y[p];
        }
        y[i] = s / l.get(i, i);
    }
    Ok(y)
}

/// Solves `a·x = b` for symmetric positive definite `a`.
pub fn solve_spd<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let l = cholesky(a)?;
    cholesky_solve(&l, b)
}

/// Result of a least-squares fit.
#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit<T> {
    /// Slopes in the original column order; columns outside the detected
    /// basis get zero.
    pub coefficients: Vec<T>,
    /// Zero unless the fit was centered.
    pub intercept: T,
    pub fitted: Vec<T>,
    pub residual_ss: T,
    pub total_ss: T,
    pub r_squared: T,
    /// Numerical rank of the (possibly centered) predictor matrix.
    pub rank: usize,
    /// Rows minus fitted parameters, the intercept included when present.
    pub residual_dof: usize,
}

impl<T: Real> OlsFit<T> {
    pub fn residuals<'a>(&'a self, y: &'a [T]) -> impl Iterator<Item = T> + 'a {
        y.iter().zip(&self.fitted).map(|(&a, &b)| a - b)
    }
}

/// Householder QR with column pivoting, truncated at the numerical rank.
struct PivotedQr<T> {
    /// Working copy: R above the diagonal, reflectors below.
    a: Matrix<T>,
    /// `perm[j]` is the original column placed at position `j`.
    perm: Vec<usize>,
    /// Diagonal of R and Householder scalars.
    diag: Vec<T>,
    betas: Vec<T>,
    rank: usize,
}

impl<T: Real> PivotedQr<T> {
    fn factor(mut a: Matrix<T>) -> Self {
        let (n, p) = (a.rows, a.cols);
        let mut perm: Vec<usize> = (0..p).collect();
        let mut diag = Vec::new();
        let mut betas = Vec::new();
        let steps = n.min(p);
        let mut lead = T::zero();
        let mut rank = 0;
        for j in 0..steps {
            let trailing_norm = |a: &Matrix<T>, c: usize| {
                (j..n)
                    .fold(T::zero(), |s, i| s + a.get(i, c) * a.get(i, c))
                    .sqrt()
            };
            let (best, best_norm) =
                (j..p)
                    .map(|c| (c, trailing_norm(&a, c)))
                    .fold(
                        (j, -T::one()),
                        |acc, cur| if cur.1 > acc.1 { cur } else { acc },
                    );
            if j == 0 {
                lead = best_norm;
            }
            if best_norm <= T::tolerance() * lead || best_norm == T::zero() {
                break;
            }
            if best != j {
                for i in 0..n {
                    let tmp = a.get(i, j);
                    a.set(i, j, a.get(i, best));
                    a.set(i, best, tmp);
                }
                perm.swap(j, best);
            }
            let x0 = a.get(j, j);
            let alpha = if x0 >= T::zero() {
                -best_norm
            } else {
                best_norm
            };
            let v0 = x0 - alpha;
            // Reflector v = (v0, a[j+1.., j]), H = I - beta v vᵀ
            let vnorm2 = v0 * v0 + (j + 1..n).fold(T::zero(), |s, i| s + a.get(i, j) * a.get(i, j));
            let beta = if vnorm2 == T::zero() {
                T::zero()
            } else {
                T::lit(2.0) / vnorm2
            };
            a.set(j, j, v0);
            for c in (j + 1)..p {
                let dot = (j..n).fold(T::zero(), |s, i| s + a.get(i, j) * a.get(i, c));
                let f = beta * dot;
                for i in j..n {
                    let v = a.get(i, c) - f * a.get(i, j);
                    a.set(i, c, v);
                }
            }
            diag.push(alpha);
            betas.push(beta);
            rank += 1;
        }
        Self {
            a,
            perm,
            diag,
            betas,
            rank,
        }
    }

    /// Applies `Qᵀ` to `y` in place.
    fn apply_qt(&self, y: &mut [T]) {
        let n = self.a.rows;
        for j in 0..self.rank {
            let dot = (j..n).fold(T::zero(), |s, i| s + self.a.get(i, j) * y[i]);
            let f = self.betas[j] * dot;
            for i in j..n {
                y[i] = y[i] - f * self.a.get(i, j);
            }
        }
    }

    /// Basic solution of `min ‖A·b − y‖` with non-basic coefficients zero.
    fn solve(&self, y: &[T]) -> Vec<T> {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let r = self.rank;
        let mut z = vec![T::zero(); r];
        for i in (0..r).rev() {
            let mut s = qty[i];
            for c in (i + 1)..r {
                s = s - self.a.get(i, c) * z[c];
            }
            z[i] = s / self.diag[i];
        }
        let mut coef = vec![T::zero(); self.a.cols];
        for (pos, &orig) in self.perm.iter().enumerate().take(r) {
            coef[orig] = z[pos];
        }
        coef
    }
}

/// Numerical rank by pivoted QR, pivots below `tolerance × largest` ignored.
pub fn rank<T: Real>(x: &Matrix<T>) -> usize {
    if x.cols() == 0 {
        return 0;
    }
    PivotedQr::factor(x.clone()).rank
}

/// Ordinary least squares of `y` on the columns of `x`.
///
/// With `center_y` set the fit includes an intercept: both `y` and the
/// columns of `x` are centered before the factorization, `total_ss` is taken
/// about the mean of `y`, and `r_squared` is the usual coefficient of
/// determination. Without it the fit passes through the origin and
/// `total_ss = Σy²`.
pub fn least_squares<T: Real>(x: &Matrix<T>, y: &[T], center_y: bool) -> Result<OlsFit<T>> {
    let n = x.rows;
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} rows but {} responses",
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::DimensionMismatch(
            "least squares needs at least two rows".into(),
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response"));
    }
    let nn = T::from_count(n);
    let y_mean = if center_y {
        y.iter().copied().sum::<T>() / nn
    } else {
        T::zero()
    };
    let x_means: Vec<T> = if center_y {
        (0..x.cols)
            .map(|j| x.column(j).into_iter().sum::<T>() / nn)
            .collect()
    } else {
        vec![T::zero(); x.cols]
    };
    let mut work = x.clone();
    if center_y {
        for i in 0..n {
            for j in 0..x.cols {
                work.set(i, j, x.get(i, j) - x_means[j]);
            }
        }
    }
    let yc: Vec<T> = y.iter().map(|&v| v - y_mean).collect();
    let total_ss = yc.iter().fold(T::zero(), |s, &v| s + v * v);
    if total_ss == T::zero() {
        return Err(Error::DegenerateResponse);
    }

    let qr = PivotedQr::factor(work.clone());
    let coefficients = qr.solve(&yc);
    let centered_fit = work.mul_vec(&coefficients)?;
    let fitted: Vec<T> = centered_fit.iter().map(|&v| v + y_mean).collect();
    let residual_ss = yc
        .iter()
        .zip(&centered_fit)
        .fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b));
    let r_squared = (T::one() - residual_ss / total_ss)
        .max(T::zero())
        .min(T::one());
    let intercept = if center_y {
        y_mean
            - x_means
                .iter()
                .zip(&coefficients)
                .fold(T::zero(), |s, (&m, &b)| s + m * b)
    } else {
        T::zero()
    };
    let params = qr.rank + usize::from(center_y);
    Ok(OlsFit {
        coefficients,
        intercept,
        fitted,
        residual_ss,
        total_ss,
        r_squared,
        rank: qr.rank,
        residual_dof: n.saturating_sub(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn cholesky_identity() {
        let l = cholesky(&Matrix::<f64>::identity(3)).unwrap();
        assert_eq!(l, Matrix::identity(3));
    }

    #[test]
    fn cholesky_two_by_two() {
        let l = cholesky(&m(&[&[4.0, 2.0], &[2.0, 3.0]])).unwrap();
        assert_relative_eq!(l.get(0, 0), 2.0);
        assert_relative_eq!(l.get(1, 0), 1.0);
        assert_relative_eq!(l.get(1, 1), 2f64.sqrt());
        assert_eq!(l.get(0, 1), 0.0);
        let back = l.matmul(&l.transpose()).unwrap();
        assert_relative_eq!(back.get(1, 1), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let err = cholesky(&m(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { index: 1, .. }));
    }

    #[test]
    fn cholesky_rejects_asymmetric() {
        assert!(matches!(
            cholesky(&m(&[&[1.0, 0.5], &[0.0, 1.0]])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn solve_spd_trivial_cases() {
        let b = vec![1.5, -2.0, 3.0];
        assert_eq!(solve_spd(&Matrix::identity(3), &b).unwrap(), b);
        let x = solve_spd(&m(&[&[2.0, 0.0], &[0.0, 4.0]]), &[2.0, 8.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(x[1], 2.0, max_relative = 1e-15);
    }

    #[test]
    fn exact_fit() {
        let x = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], &[2.0, -1.0]]);
        let y: Vec<f64> = (0..4)
            .map(|i| 3.0 * x.get(i, 0) - 2.0 * x.get(i, 1))
            .collect();
        let fit = least_squares(&x, &y, false).unwrap();
        assert!(fit.residual_ss < 1e-20);
        assert_relative_eq!(fit.r_squared, 1.0);
        assert_relative_eq!(fit.coefficients[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(fit.coefficients[1], -2.0, max_relative = 1e-12);
    }

    #[test]
    fn proportional_no_intercept() {
        let x = m(&[&[1.0], &[2.0], &[3.0]]);
        let fit = least_squares(&x, &[2.0, 4.0, 6.0], false).unwrap();
        assert_relative_eq!(fit.coefficients[0], 2.0, max_relative = 1e-14);
        assert!(fit.residual_ss < 1e-24);
        assert_eq!(fit.rank, 1);
        assert_eq!(fit.residual_dof, 2);
    }

    #[test]
    fn duplicate_columns_reduce_rank() {
        let single = m(&[&[1.0], &[2.0], &[4.0], &[-1.0], &[0.5]]);
        let double = m(&[
            &[1.0, 1.0],
            &[2.0, 2.0],
            &[4.0, 4.0],
            &[-1.0, -1.0],
            &[0.5, 0.5],
        ]);
        let y = [0.3, 1.9, 4.4, -0.7, 0.1];
        let a = least_squares(&single, &y, true).unwrap();
        let b = least_squares(&double, &y, true).unwrap();
        assert_eq!(b.rank, 1);
        for (u, v) in a.fitted.iter().zip(&b.fitted) {
            assert_relative_eq!(u, v, max_relative = 1e-12);
        }
        assert_relative_eq!(a.r_squared, b.r_squared, max_relative = 1e-12);
    }

    #[test]
    fn constant_response_is_degenerate() {
        let x = m(&[&[1.0], &[2.0], &[3.0]]);
        assert_eq!(
            least_squares(&x, &[5.0, 5.0, 5.0], true),
            Err(Error::DegenerateResponse)
        );
    }

    #[test]
    fn zero_column_design_fits_the_mean() {
        let x = Matrix::<f64>::new(3, 0, vec![]).unwrap();
        let fit = least_squares(&x, &[1.0, 2.0, 6.0], true).unwrap();
        assert_eq!(fit.rank, 0);
        assert_eq!(fit.r_squared, 0.0);
        assert_eq!(fit.fitted, vec![3.0; 3]);
        assert_eq!(fit.residual_dof, 2);
    }

    #[test]
    fn works_in_single_precision() {
        let x = Matrix::<f32>::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let fit = least_squares(&x, &[1.1f32, 1.9, 3.2, 3.8], true).unwrap();
        assert!((fit.coefficients[0] - 0.94).abs() < 1e-5);
    }
}
