//! Dense Hermitian eigendecomposition and eigenvalue grouping.
//!
//! Two deterministic routes are provided:
//!
//! * [`EigenMethod::TridiagonalQl`] (default): unitary Householder reduction
//!   to Hermitian tridiagonal form, a diagonal phase change that makes the
//!   off-diagonal real, then implicit-shift QL on the real tridiagonal
//!   matrix with eigenvector accumulation. `O(n³)`.
//! * [`EigenMethod::CyclicJacobi`]: cyclic complex Jacobi rotations. Slower,
//!   used as an independent cross-check.
//!
//! Both run single-threaded with a fixed operation order, so identical input
//! bits give identical output bits.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{cone, czero, Real, C};
use crate::space::{DiscreteMeasureSpace, VertexFunction};

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<R> {
    matrix: Matrix<R>,
}

impl<R: Real> HermitianMatrix<R> {
    /// Accepts `a` if `|a_ij − conj(a_ji)| ≤ tol · max|a|` with
    /// `tol =` [`Real::hermitian_tol`]. The stored matrix is the exact
    /// Hermitian part `(a + a*)/2`.
    pub fn new(a: Matrix<R>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::ShapeMismatch { expected: n, found: a.cols() });
        }
        let tol = R::hermitian_tol() * a.max_abs().max(R::min_positive_value());
        let mut h = a.clone();
        for i in 0..n {
            for j in i..n {
                let gap = (a[(i, j)] - a[(j, i)].conj()).norm();
                if gap > tol {
                    // Row and column indices; callers holding a space map them to ids.
                    return Err(Error::NonHermitian { x: i.to_string(), y: j.to_string(), gap: gap.as_f64() });
                }
                let half = R::lit(0.5);
                let v = (a[(i, j)] + a[(j, i)].conj()) * half;
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
            h[(i, i)] = C::new(h[(i, i)].re, R::zero());
        }
        Ok(Self { matrix: h })
    }

    pub fn from_real_rows(n: usize, rows: &[R]) -> Result<Self> {
        let data = rows.iter().map(|&x| C::new(x, R::zero())).collect();
        Self::new(Matrix::from_rows(n, n, data)?)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix<R> {
        &self.matrix
    }

    pub fn trace(&self) -> R {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Simultaneous row/column permutation: `out[(i, j)] = self[(perm[i], perm[j])]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.dim();
        if perm.len() != n {
            return Err(Error::ShapeMismatch { expected: n, found: perm.len() });
        }
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self.matrix[(perm[i], perm[j])];
            }
        }
        Ok(Self { matrix: out })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    #[default]
    TridiagonalQl,
    CyclicJacobi,
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as the
/// columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<R> {
    values: Vec<R>,
    vectors: Matrix<R>,
}

impl<R: Real> EigenDecomposition<R> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn vectors(&self) -> &Matrix<R> {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> Vec<C<R>> {
        self.vectors.column(k)
    }

    /// Eigenvectors of the symmetrized matrix mapped back by `D^{-1/2}` to
    /// `ℓ²(V, m)`-orthonormal eigenfunctions of `Ã`.
    pub fn eigenfunctions(&self, space: &Arc<DiscreteMeasureSpace<R>>) -> Result<Vec<VertexFunction<R>>> {
        if space.len() != self.dim() {
            return Err(Error::ShapeMismatch { expected: self.dim(), found: space.len() });
        }
        (0..self.dim())
            .map(|k| {
                let values = self
                    .vector(k)
                    .into_iter()
                    .zip(space.measure())
                    .map(|(v, &m)| v / m.sqrt())
                    .collect();
                VertexFunction::new(space.clone(), values)
            })
            .collect()
    }

    /// `V Λ V*`.
    pub fn reconstruct(&self) -> Matrix<R> {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            let lambda = self.values[k];
            for i in 0..n {
                let vi = self.vectors[(i, k)] * lambda;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

pub fn eigendecompose<R: Real>(h: &HermitianMatrix<R>) -> Result<EigenDecomposition<R>> {
    eigendecompose_with(h, EigenMethod::default())
}

pub fn eigendecompose_with<R: Real>(h: &HermitianMatrix<R>, method: EigenMethod) -> Result<EigenDecomposition<R>> {
    let (values, columns) = match method {
        EigenMethod::TridiagonalQl => tridiagonal_ql(h.matrix())?,
        EigenMethod::CyclicJacobi => cyclic_jacobi(h.matrix())?,
    };
    Ok(sorted(values, columns, h.dim()))
}

/// Orders eigenpairs ascending (stable on ties) and assembles the vector matrix.
fn sorted<R: Real>(values: Vec<R>, columns: Vec<C<R>>, n: usize) -> EigenDecomposition<R> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new)] = columns[old * n + i];
        }
    }
    EigenDecomposition { values: order.iter().map(|&k| values[k]).collect(), vectors }
}

/// Returns eigenvalues and eigenvectors stored column-major.
fn tridiagonal_ql<R: Real>(h: &Matrix<R>) -> Result<(Vec<R>, Vec<C<R>>)> {
    let n = h.rows();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut a = h.clone();
    let mut q = Matrix::<R>::identity(n);
    let two = R::lit(2.0);

    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<C<R>> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let tail: R = x[1..].iter().map(|v| v.norm_sqr()).sum();
        if tail == R::zero() {
            continue;
        }
        let x0 = x[0];
        let xnorm = (x0.norm_sqr() + tail).sqrt();
        let phase = if x0.norm() > R::zero() { x0 / x0.norm() } else { cone() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] = x0 - alpha;
        let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<R>().sqrt();
        for c in &mut v {
            *c = *c / vnorm;
        }

        // A22 ← H A22 H = A22 − 2(v w* + w v*), w = A22 v − (v* A22 v) v.
        let p: Vec<C<R>> = (0..len)
            .map(|i| (0..len).fold(czero(), |acc, j| acc + a[(k + 1 + i, k + 1 + j)] * v[j]))
            .collect();
        let kk = v.iter().zip(&p).fold(czero::<R>(), |acc, (vi, pi)| acc + vi.conj() * pi).re;
        let w: Vec<C<R>> = p.iter().zip(&v).map(|(&pi, &vi)| pi - vi * kk).collect();
        for i in 0..len {
            for j in 0..len {
                let upd = (v[i] * w[j].conj() + w[i] * v[j].conj()) * two;
                a[(k + 1 + i, k + 1 + j)] = a[(k + 1 + i, k + 1 + j)] - upd;
            }
        }
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in 1..len {
            a[(k + 1 + i, k)] = czero();
            a[(k, k + 1 + i)] = czero();
        }

        // Q ← Q H.
        for r in 0..n {
            let t = (0..len).fold(czero(), |acc, j| acc + q[(r, k + 1 + j)] * v[j]) * two;
            for j in 0..len {
                q[(r, k + 1 + j)] = q[(r, k + 1 + j)] - t * v[j].conj();
            }
        }
    }

    let mut d: Vec<R> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut e = vec![R::zero(); n];
    // Column-major eigenvector accumulator Z = Q·diag(δ), where the unit
    // phases δ make the subdiagonal of diag(δ)* T diag(δ) real and nonnegative.
    let mut z = vec![czero::<R>(); n * n];
    let mut delta = cone::<R>();
    for i in 0..n {
        for r in 0..n {
            z[i * n + r] = q[(r, i)] * delta;
        }
        if i + 1 < n {
            let sub = a[(i + 1, i)];
            let mag = sub.norm();
            e[i] = mag;
            if mag > R::zero() {
                delta = delta * (sub / mag);
            }
        }
    }

    ql_implicit(&mut d, &mut e, &mut z, n)?;
    Ok((d, z))
}

/// Implicit-shift QL on the real symmetric tridiagonal matrix with diagonal
/// `d` and subdiagonal `e[i] = T[i+1][i]` (`e[n-1]` unused). Rotations are
/// applied to the columns of the column-major `z`.
fn ql_implicit<R: Real>(d: &mut [R], e: &mut [R], z: &mut [C<R>], n: usize) -> Result<()> {
    const MAX_ITER_PER_VALUE: usize = 60;
    let eps = R::epsilon();
    let two = R::lit(2.0);
    e[n - 1] = R::zero();
    let mut f = R::zero();
    let mut tst1 = R::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_ITER_PER_VALUE {
                    return Err(Error::NotConverged(MAX_ITER_PER_VALUE * n));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(R::one());
                if p < R::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = R::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = R::zero();
                let mut s2 = R::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (left, right) = z.split_at_mut((i + 1) * n);
                    let col_i = &mut left[i * n..];
                    let col_i1 = &mut right[..n];
                    for (zi, zi1) in col_i.iter_mut().zip(col_i1.iter_mut()) {
                        let hz = *zi1;
                        *zi1 = *zi * s + hz * c;
                        *zi = *zi * c - hz * s;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = R::zero();
    }
    Ok(())
}

/// Cyclic complex Jacobi. Each rotation first rephases column/row `q` so the
/// pivot `a_pq` becomes real and nonnegative, then applies a real plane
/// rotation that annihilates it. Capped at `50 n²` rotations.
fn cyclic_jacobi<R: Real>(h: &Matrix<R>) -> Result<(Vec<R>, Vec<C<R>>)> {
    let n = h.rows();
    let mut a = h.clone();
    let mut v = Matrix::<R>::identity(n);
    let cap = 50 * n * n;
    let mut rotations = 0usize;
    let scale = a.frobenius_norm();
    let target = R::epsilon() * scale;
    loop {
        let off: R = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<R>()
            .sqrt();
        if off <= target || n < 2 {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == R::zero() || mag <= R::epsilon() * R::lit(1e-3) * scale {
                    continue;
                }
                rotations += 1;
                if rotations > cap {
                    return Err(Error::NotConverged(cap));
                }
                let phase = apq / mag; // e^{iθ}
                for i in 0..n {
                    a[(i, q)] = a[(i, q)] * phase.conj();
                    v[(i, q)] = v[(i, q)] * phase.conj();
                }
                for j in 0..n {
                    a[(q, j)] = a[(q, j)] * phase;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (R::lit(2.0) * mag);
                let mut t = R::one() / (theta.abs() + (theta * theta + R::one()).sqrt());
                if theta < R::zero() {
                    t = -t;
                }
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * c - arq * s;
                    a[(r, q)] = arp * s + arq * c;
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * c - vrq * s;
                    v[(r, q)] = vrp * s + vrq * c;
                }
                for r in 0..n {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = apr * c - aqr * s;
                    a[(q, r)] = apr * s + aqr * c;
                }
                a[(p, p)] = C::new(app - t * mag, R::zero());
                a[(q, q)] = C::new(aqq + t * mag, R::zero());
                a[(p, q)] = czero();
                a[(q, p)] = czero();
            }
        }
    }
    let values = (0..n).map(|i| a[(i, i)].re).collect();
    let mut columns = vec![czero(); n * n];
    for k in 0..n {
        for i in 0..n {
            columns[k * n + i] = v[(i, k)];
        }
    }
    Ok((values, columns))
}

/// One cluster of numerically equal eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGroup<R> {
    /// Arithmetic mean of the members.
    pub value: R,
    /// Indices into the ascending eigenvalue list.
    pub indices: Vec<usize>,
}

impl<R> SpectralGroup<R> {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSpectrum<R> {
    pub groups: Vec<SpectralGroup<R>>,
    pub tol: R,
}

impl<R: Real> GroupedSpectrum<R> {
    pub fn representatives(&self) -> Vec<R> {
        self.groups.iter().map(|g| g.value).collect()
    }
}

/// Greedy ascending clustering of sorted eigenvalues: a new group starts
/// when the gap to the previous eigenvalue exceeds `tol · (1 + |λ|)`.
pub fn group_eigenvalues<R: Real>(values: &[R], tol: R) -> Result<GroupedSpectrum<R>> {
    if !(tol > R::zero()) {
        return Err(Error::InvalidArgument("grouping tolerance must be positive".into()));
    }
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("eigenvalues must be sorted ascending".into()));
    }
    let mut groups: Vec<SpectralGroup<R>> = Vec::new();
    for (k, &lambda) in values.iter().enumerate() {
        let starts_new = match k.checked_sub(1) {
            None => true,
            Some(prev) => lambda - values[prev] > tol * (R::one() + lambda.abs()),
        };
        if starts_new {
            groups.push(SpectralGroup { value: lambda, indices: vec![k] });
        } else if let Some(g) = groups.last_mut() {
            g.indices.push(k);
        }
    }
    for g in &mut groups {
        let sum: R = g.indices.iter().map(|&i| values[i]).sum();
        g.value = sum / R::from_usize(g.indices.len()).unwrap_or_else(R::one);
    }
    Ok(GroupedSpectrum { groups, tol })
}
