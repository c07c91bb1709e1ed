//! Small dense linear algebra used by the oracles and the penalty solve.
//!
//! Everything here is sized for validation work (a few hundred unknowns at
//! most); nothing is blocked or cache-tuned.

use num_complex::Complex;

use crate::error::{BfdError, Result};
use crate::scalar::Real;

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(BfdError::SizeMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::zero(), |a, v| a + v.abs()))
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |a, (x, y)| a.max((*x - *y).abs()))
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| *v * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * x` for a complex vector.
    pub fn matvec(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if x.len() != self.cols {
            return Err(BfdError::SizeMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, v)| {
                        acc + v.scale(*a)
                    })
            })
            .collect())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(BfdError::SizeMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs().max(T::min_positive_value());
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().partial_cmp(&m[(j, col)].abs()).unwrap())
            .unwrap();
        if m[(pivot, col)].abs() <= T::epsilon() * scale * T::from_usize_lossy(n) {
            return Err(BfdError::Singular(format!("zero pivot in column {col}")));
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            x.swap(col, pivot);
        }
        for i in col + 1..n {
            let f = m[(i, col)] / m[(col, col)];
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m[(col, j)];
                m[(i, j)] -= f * v;
            }
            let v = x[col];
            x[i] -= f * v;
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= m[(i, j)] * x[j];
        }
        x[i] = acc / m[(i, i)];
    }
    Ok(x)
}

/// Least-squares solution of an overdetermined system via Householder QR.
///
/// Returns the minimiser and the Euclidean norm of the residual. Rank
/// deficiency (relative to `1e3 * eps`) is reported as an error.
pub fn least_squares<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<(Vec<T>, T)> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(BfdError::SizeMismatch {
            expected: m,
            found: b.len(),
        });
    }
    if m < n {
        return Err(BfdError::InvalidArgument(format!(
            "least squares needs at least as many rows ({m}) as columns ({n})"
        )));
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let mut diag_max = T::zero();
    for k in 0..n {
        let norm = (k..m).fold(T::zero(), |acc, i| acc + r[(i, k)] * r[(i, k)]).sqrt();
        if norm == T::zero() {
            return Err(BfdError::Singular(format!("column {k} is zero")));
        }
        let alpha = if r[(k, k)] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2 = v.iter().fold(T::zero(), |acc, x| acc + *x * *x);
        if vnorm2 > T::zero() {
            for j in k..n {
                let dot = (k..m).fold(T::zero(), |acc, i| acc + v[i - k] * r[(i, j)]);
                let f = T::lit(2.0) * dot / vnorm2;
                for i in k..m {
                    r[(i, j)] -= f * v[i - k];
                }
            }
            let dot = (k..m).fold(T::zero(), |acc, i| acc + v[i - k] * y[i]);
            let f = T::lit(2.0) * dot / vnorm2;
            for i in k..m {
                y[i] -= f * v[i - k];
            }
        }
        diag_max = diag_max.max(r[(k, k)].abs());
    }
    let tol = diag_max * T::epsilon() * T::lit(1e3);
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        if r[(i, i)].abs() <= tol {
            return Err(BfdError::Singular(format!("rank deficient at column {i}")));
        }
        let mut acc = y[i];
        for j in i + 1..n {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    let resid = (n..m).fold(T::zero(), |acc, i| acc + y[i] * y[i]).sqrt();
    Ok((x, resid))
}

/// Solves the complex 2x2 system `[[a, b], [c, d]] x = rhs`.
pub fn solve2<T: Real>(
    m: [[Complex<T>; 2]; 2],
    rhs: [Complex<T>; 2],
) -> Option<[Complex<T>; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.norm() == T::zero() {
        return None;
    }
    Some([
        (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_elimination_recovers_known_solution() {
        let a = DenseMatrix::from_row_major(
            3,
            3,
            vec![0.0, 2.0, 1.0, 1.0, -1.0, 0.5, 4.0, 0.0, -3.0],
        )
        .unwrap();
        let x_true = [1.5, -2.0, 0.25];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[(i, j)] * x_true[j]).sum())
            .collect();
        let x = solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(solve(&a, &[1.0, 2.0]), Err(BfdError::Singular(_))));
    }

    #[test]
    fn least_squares_fits_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let a = DenseMatrix::from_row_major(5, 2, xs.iter().flat_map(|&x| [1.0, x]).collect())
            .unwrap();
        let b: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let (coef, resid) = least_squares(&a, &b).unwrap();
        assert!((coef[0] - 3.0).abs() < 1e-14 && (coef[1] + 0.5).abs() < 1e-14);
        assert!(resid < 1e-13);
    }

    #[test]
    fn complex_two_by_two() {
        let i = Complex::new(0.0, 1.0);
        let one = Complex::new(1.0, 0.0);
        let m = [[one, i], [i * 2.0, one * 3.0]];
        let x = [Complex::new(0.5, -1.0), Complex::new(2.0, 0.25)];
        let rhs = [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]];
        let got = solve2(m, rhs).unwrap();
        assert!((got[0] - x[0]).norm() < 1e-15 && (got[1] - x[1]).norm() < 1e-15);
    }

    #[test]
    fn matmul_against_identity() {
        let a = DenseMatrix::from_row_major(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(DenseMatrix::identity(2).matmul(&a), a);
        assert_eq!(a.matmul(&DenseMatrix::identity(3)), a);
        assert_eq!(a.transpose().transpose(), a);
    }
}
