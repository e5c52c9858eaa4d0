//! Small dense complex linear algebra used by the solvers and checks.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{cone, czero, Real, C};

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<C<R>>,
}

impl<R: Real> Matrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![czero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<C<R>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C<R>>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::ShapeMismatch { expected: rows, found: col.len() });
            }
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C<R>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C<R>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == czero() {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C<R>]) -> Result<Vec<C<R>>> {
        if v.len() != self.cols {
            return Err(Error::ShapeMismatch { expected: self.cols, found: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .fold(czero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect())
    }

    pub fn frobenius_norm(&self) -> R {
        self.data.iter().map(|v| v.norm_sqr()).sum::<R>().sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |acc, v| acc.max(v.norm()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch { expected: self.data.len(), found: other.data.len() });
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }
}

impl<R> Index<(usize, usize)> for Matrix<R> {
    type Output = C<R>;

    fn index(&self, (i, j): (usize, usize)) -> &C<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R> IndexMut<(usize, usize)> for Matrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<R> {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<R> {
    lu: Matrix<R>,
    perm: Vec<usize>,
}

impl<R: Real> Lu<R> {
    pub fn factor(mut a: Matrix<R>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::ShapeMismatch { expected: n, found: a.cols() });
        }
        let scale = a.max_abs();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, a[(i, k)].norm()))
                .fold((k, R::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > scale * R::epsilon()) || pivot == R::zero() {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let inv = cone::<R>() / a[(k, k)];
            for i in (k + 1)..n {
                let factor = a[(i, k)] * inv;
                a[(i, k)] = factor;
                if factor == czero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let t = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - factor * t;
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[C<R>]) -> Result<Vec<C<R>>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::ShapeMismatch { expected: n, found: b.len() });
        }
        let mut x: Vec<C<R>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            x[i] = (0..i).fold(x[i], |acc, j| acc - self.lu[(i, j)] * x[j]);
        }
        for i in (0..n).rev() {
            x[i] = ((i + 1)..n).fold(x[i], |acc, j| acc - self.lu[(i, j)] * x[j]) / self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Weighted inner product `Σ conj(a_i) b_i w_i`.
pub(crate) fn winner<R: Real>(a: &[C<R>], b: &[C<R>], w: &[R]) -> C<R> {
    crate::space::raw_inner(a, b, w)
}

/// Orthonormalizes `vectors` in index order (modified Gram–Schmidt with one
/// reorthogonalization pass) under the weighted inner product `w`.
///
/// Vectors whose residual norm falls below `rank_tol` times the largest input
/// norm are dropped, so the output spans the same subspace and its length is
/// the numerical rank.
pub fn orthonormalize<R: Real>(vectors: &[Vec<C<R>>], w: &[R], rank_tol: R) -> Vec<Vec<C<R>>> {
    let scale = vectors
        .iter()
        .map(|v| winner(v, v, w).re.sqrt())
        .fold(R::zero(), R::max);
    let mut basis: Vec<Vec<C<R>>> = Vec::new();
    if scale == R::zero() {
        return basis;
    }
    for v in vectors {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = winner(q, &r, w);
                for (ri, &qi) in r.iter_mut().zip(q) {
                    *ri = *ri - c * qi;
                }
            }
        }
        let norm = winner(&r, &r, w).re.sqrt();
        if norm > rank_tol * scale {
            let inv = R::one() / norm;
            basis.push(r.into_iter().map(|x| x * inv).collect());
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn lu_solves_small_complex_system() {
        let a = Matrix::from_rows(
            2,
            2,
            vec![Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, -1.0)],
        )
        .unwrap();
        let x = vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5)];
        let b = a.matvec(&x).unwrap();
        let got = Lu::factor(a).unwrap().solve(&b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = Matrix::<f64>::zeros(2, 2);
        assert!(matches!(Lu::factor(a), Err(Error::Singular)));
    }

    #[test]
    fn orthonormalize_drops_dependent_vectors() {
        let v = |a: f64, b: f64| vec![Complex64::new(a, 0.0), Complex64::new(b, 0.0)];
        let w = [1.0, 4.0];
        let q = orthonormalize(&[v(1.0, 1.0), v(2.0, 2.0), v(1.0, 0.0)], &w, 1e-10);
        assert_eq!(q.len(), 2);
        assert!((winner(&q[0], &q[1], &w)).norm() < 1e-15);
        assert!((winner(&q[1], &q[1], &w).re - 1.0).abs() < 1e-15);
    }
}
