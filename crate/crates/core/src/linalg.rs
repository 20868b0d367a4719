//! Small dense linear algebra: symmetric matrices, Cholesky factorisation and
//! the Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a symmetric matrix from a function evaluated on the lower triangle.
    pub fn from_symmetric_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.data[i * self.n + j] == self.data[j * self.n + i]))
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn add_diagonal(&mut self, value: T) {
        for i in 0..self.n {
            self.data[i * self.n + i] = self.data[i * self.n + i] + value;
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`, stored packed by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    n: usize,
    // row i occupies [i(i+1)/2, i(i+1)/2 + i]
    packed: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factorises a symmetric matrix; only the lower triangle is read.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.size();
        let mut packed = vec![T::zero(); n * (n + 1) / 2];
        for i in 0..n {
            let ri = i * (i + 1) / 2;
            for j in 0..=i {
                let rj = j * (j + 1) / 2;
                let s = dot(&packed[ri..ri + j], &packed[rj..rj + j]);
                let v = a[(i, j)] - s;
                if i == j {
                    if !(v > T::zero()) || !v.is_finite() {
                        return Err(Error::NotPositiveDefinite);
                    }
                    packed[ri + i] = v.sqrt();
                } else {
                    packed[ri + j] = v / packed[rj + j];
                }
            }
        }
        Ok(Self { n, packed })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.packed[i * (i + 1) / 2 + j]
    }

    /// The factor as a dense lower-triangular matrix.
    pub fn factor(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..=i {
                m[(i, j)] = self.at(i, j);
            }
        }
        m
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        for i in 0..self.n {
            let ri = i * (i + 1) / 2;
            let s = dot(&self.packed[ri..ri + i], &x[..i]);
            x[i] = (x[i] - s) / self.packed[ri + i];
        }
        x
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_upper(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        for i in (0..self.n).rev() {
            x[i] = x[i] / self.at(i, i);
            let xi = x[i];
            let ri = i * (i + 1) / 2;
            for (xk, &l) in x[..i].iter_mut().zip(&self.packed[ri..ri + i]) {
                *xk = *xk - l * xi;
            }
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `bᵀ A⁻¹ b` computed as `‖L⁻¹ b‖²`, which is never negative.
    pub fn quadratic_form(&self, b: &[T]) -> T {
        let z = self.solve_lower(b);
        dot(&z, &z)
    }

    /// `aᵀ A⁻¹ b`.
    pub fn bilinear_form(&self, a: &[T], b: &[T]) -> T {
        dot(&self.solve_lower(a), &self.solve_lower(b))
    }

    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.n).fold(T::zero(), |acc, i| acc + two * self.at(i, i).ln())
    }
}

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `sub[i]` multiplies `x[i-1]` in row `i` (`sub[0]` unused), `sup[i]`
/// multiplies `x[i+1]` (last entry unused).
pub fn solve_tridiagonal<T: Real>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rhs.len().min(sub.len()).min(sup.len()) });
    }
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    for i in 0..n {
        let denom = if i == 0 { diag[0] } else { diag[i] - sub[i] * c[i - 1] };
        if denom == T::zero() || !denom.is_finite() {
            return Err(Error::TridiagonalBreakdown { row: i, context: String::new() });
        }
        c[i] = if i + 1 < n { sup[i] / denom } else { T::zero() };
        d[i] = if i == 0 { rhs[0] / denom } else { (rhs[i] - sub[i] * d[i - 1]) / denom };
    }
    let mut x = d;
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] = x[i] - c[i] * x[i + 1];
    }
    Ok(x)
}
