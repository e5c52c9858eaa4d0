//! Locally finite Hermitian kernels and the formal operator they induce.
//!
//! A kernel `a : V × V → ℂ` acts on arbitrary functions by
//!
//! ```text
//! (Ãw)(x) = Σ_y a(x, y) w(y) m(y)
//! ```
//!
//! and, being Hermitian, defines a selfadjoint operator `L` on `ℓ²(V, m)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::eigensolve::HermitianMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{czero, Real, C};
use crate::space::{same_space, DiscreteMeasureSpace, VertexFunction};

#[derive(Debug, Clone)]
pub struct Kernel<R> {
    space: Arc<DiscreteMeasureSpace<R>>,
    /// Row `x` holds `(y, a(x, y))` for nonzero entries, sorted by `y`.
    rows: Vec<Vec<(usize, C<R>)>>,
}

impl<R: Real> Kernel<R> {
    /// Builds a kernel from a complete list of entries.
    ///
    /// Both `(x, y)` and `(y, x)` must be supplied for off-diagonal pairs;
    /// the result must be Hermitian to a relative tolerance of
    /// [`Real::hermitian_tol`]. Exact zeros are not stored.
    pub fn from_entries(
        space: Arc<DiscreteMeasureSpace<R>>,
        entries: impl IntoIterator<Item = (usize, usize, C<R>)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), C<R>> = BTreeMap::new();
        for (x, y, v) in entries {
            space.check_index(x)?;
            space.check_index(y)?;
            if let Some(prev) = map.insert((x, y), v) {
                if prev != v {
                    return Err(Error::ConflictingEntry {
                        x: space.id(x).to_string(),
                        y: space.id(y).to_string(),
                    });
                }
            }
        }
        Self::from_map(space, map)
    }

    fn from_map(space: Arc<DiscreteMeasureSpace<R>>, map: BTreeMap<(usize, usize), C<R>>) -> Result<Self> {
        let scale = map.values().fold(R::zero(), |acc, v| acc.max(v.norm()));
        let tol = R::hermitian_tol() * scale.max(R::min_positive_value());
        for (&(x, y), &v) in &map {
            let mirror = map.get(&(y, x)).copied().unwrap_or_else(czero);
            let gap = (v - mirror.conj()).norm();
            if gap > tol {
                return Err(Error::NonHermitian {
                    x: space.id(x).to_string(),
                    y: space.id(y).to_string(),
                    gap: gap.as_f64(),
                });
            }
        }
        let mut rows = vec![Vec::new(); space.len()];
        for ((x, y), v) in map {
            if v != czero() {
                rows[x].push((y, v));
            }
        }
        Ok(Self { space, rows })
    }

    /// Kernel with `a(x, x) = values[x]` and no off-diagonal entries.
    pub fn diagonal(space: Arc<DiscreteMeasureSpace<R>>, values: &[R]) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::ShapeMismatch { expected: space.len(), found: values.len() });
        }
        Self::from_entries(space, values.iter().enumerate().map(|(i, &v)| (i, i, C::new(v, R::zero()))))
    }

    /// Kernel whose entries `a(x, y)` are read off a dense matrix.
    pub fn from_dense(space: Arc<DiscreteMeasureSpace<R>>, a: &Matrix<R>) -> Result<Self> {
        let n = space.len();
        if a.rows() != n || a.cols() != n {
            return Err(Error::ShapeMismatch { expected: n, found: a.rows() });
        }
        let entries = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).map(|(x, y)| (x, y, a[(x, y)]));
        Self::from_entries(space, entries)
    }

    /// Parses the kernel text format `x<TAB>y<TAB>re[<TAB>im]`.
    ///
    /// A missing mirror entry `(y, x)` is completed as `conj(a(x, y))`.
    /// Repeated pairs with different values are rejected, as are pairs whose
    /// supplied mirror breaks Hermitian symmetry.
    pub fn parse(space: Arc<DiscreteMeasureSpace<R>>, text: &str) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), C<R>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: lineno + 1, message };
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(err("expected x<TAB>y<TAB>re[<TAB>im]".into()));
            }
            let x = space.index_of(fields[0]).map_err(|e| err(e.to_string()))?;
            let y = space.index_of(fields[1]).map_err(|e| err(e.to_string()))?;
            let num = |s: &str| -> Result<R> {
                let v: f64 = s.parse().map_err(|_| err(format!("invalid number {s:?}")))?;
                if !v.is_finite() {
                    return Err(err(format!("non-finite number {s:?}")));
                }
                Ok(R::lit(v))
            };
            let re = num(fields[2])?;
            let im = if fields.len() == 4 { num(fields[3])? } else { R::zero() };
            let v = C::new(re, im);
            if let Some(prev) = map.insert((x, y), v) {
                if prev != v {
                    return Err(err(format!(
                        "conflicting duplicate entry for pair ({:?}, {:?})",
                        fields[0], fields[1]
                    )));
                }
            }
        }
        let missing: Vec<((usize, usize), C<R>)> = map
            .iter()
            .filter(|(&(x, y), _)| x != y && !map.contains_key(&(y, x)))
            .map(|(&(x, y), &v)| ((y, x), v.conj()))
            .collect();
        map.extend(missing);
        Self::from_map(space, map)
    }

    /// Writes every stored entry in the kernel text format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, v) in row {
                let _ = writeln!(out, "{}\t{}\t{}\t{}", self.space.id(x), self.space.id(y), v.re, v.im);
            }
        }
        out
    }

    pub fn space(&self) -> &Arc<DiscreteMeasureSpace<R>> {
        &self.space
    }

    pub fn row(&self, x: usize) -> &[(usize, C<R>)] {
        &self.rows[x]
    }

    pub fn entry(&self, x: usize, y: usize) -> C<R> {
        self.rows[x]
            .binary_search_by_key(&y, |&(c, _)| c)
            .map(|i| self.rows[x][i].1)
            .unwrap_or_else(|_| czero())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C<R>)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |&(y, v)| (x, y, v)))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Largest row support size; finite for every kernel on a finite space.
    pub fn max_row_support(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Dense matrix of `Ã` in the coordinate basis: `(A_m)_{xy} = a(x, y) m(y)`.
    pub fn operator_matrix(&self) -> Matrix<R> {
        let n = self.space.len();
        let m = self.space.measure();
        let mut a = Matrix::zeros(n, n);
        for (x, y, v) in self.entries() {
            a[(x, y)] = v * m[y];
        }
        a
    }

    /// `max_x Σ_y |a(x, y)| m(y)`: an upper bound for the spectral radius.
    pub fn row_norm_bound(&self) -> R {
        let m = self.space.measure();
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(y, v)| v.norm() * m[y]).sum::<R>())
            .fold(R::zero(), R::max)
    }

    pub(crate) fn apply_raw(&self, w: &[C<R>]) -> Vec<C<R>> {
        let m = self.space.measure();
        self.rows
            .iter()
            .map(|row| row.iter().fold(czero(), |acc, &(y, a)| acc + a * w[y] * m[y]))
            .collect()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.rows == other.rows
    }
}

/// Undirected graph with positive symmetric edge weights over a measure space.
#[derive(Debug, Clone)]
pub struct GraphSpec<R> {
    space: Arc<DiscreteMeasureSpace<R>>,
    /// Canonical edges `(x, y, b)` with `x < y`.
    edges: Vec<(usize, usize, R)>,
}

impl<R: Real> GraphSpec<R> {
    /// An edge may be listed in either or both orientations; both listings
    /// must carry the same weight.
    pub fn new(
        space: Arc<DiscreteMeasureSpace<R>>,
        edges: impl IntoIterator<Item = (usize, usize, R)>,
    ) -> Result<Self> {
        let mut canon: BTreeMap<(usize, usize), R> = BTreeMap::new();
        for (x, y, b) in edges {
            space.check_index(x)?;
            space.check_index(y)?;
            if x == y {
                return Err(Error::SelfLoop(space.id(x).to_string()));
            }
            if !(b.is_finite() && b > R::zero()) {
                return Err(Error::NonpositiveWeight {
                    x: space.id(x).to_string(),
                    y: space.id(y).to_string(),
                    weight: b.as_f64(),
                });
            }
            let key = (x.min(y), x.max(y));
            if let Some(prev) = canon.insert(key, b) {
                if prev != b {
                    return Err(Error::ConflictingEntry {
                        x: space.id(x).to_string(),
                        y: space.id(y).to_string(),
                    });
                }
            }
        }
        let edges = canon.into_iter().map(|((x, y), b)| (x, y, b)).collect();
        Ok(Self { space, edges })
    }

    /// Parses `x<TAB>y<TAB>b` lines.
    pub fn parse(space: Arc<DiscreteMeasureSpace<R>>, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: lineno + 1, message };
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(err("expected x<TAB>y<TAB>b".into()));
            }
            let x = space.index_of(fields[0]).map_err(|e| err(e.to_string()))?;
            let y = space.index_of(fields[1]).map_err(|e| err(e.to_string()))?;
            let b: f64 = fields[2].parse().map_err(|_| err(format!("invalid weight {:?}", fields[2])))?;
            if !(b.is_finite() && b > 0.0) {
                return Err(err("edge weight must be positive".into()));
            }
            if x == y {
                return Err(err(format!("self-loop at vertex {:?}", fields[0])));
            }
            edges.push((x, y, R::lit(b)));
        }
        Self::new(space, edges).map_err(|e| match e {
            Error::ConflictingEntry { x, y } => Error::Parse {
                line: 0,
                message: format!("conflicting weights for edge ({x:?}, {y:?})"),
            },
            other => other,
        })
    }

    pub fn space(&self) -> &Arc<DiscreteMeasureSpace<R>> {
        &self.space
    }

    pub fn edges(&self) -> &[(usize, usize, R)] {
        &self.edges
    }

    /// Neighbor lists in vertex order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.space.len()];
        for &(x, y, _) in &self.edges {
            adj[x].push(y);
            adj[y].push(x);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        adj
    }
}

/// Weighted graph Laplacian as a kernel:
/// `a(x, y) = -b(x, y) / (m(x) m(y))` for neighbors and
/// `a(x, x) = Σ_{y~x} b(x, y) / m(x)²`, so that
/// `(Ãu)(x) = (1/m(x)) Σ_{y~x} b(x, y) (u(x) - u(y))`.
pub fn laplacian_from_graph<R: Real>(graph: &GraphSpec<R>) -> Result<Kernel<R>> {
    let space = graph.space().clone();
    let m = space.measure();
    let mut degree = vec![R::zero(); space.len()];
    let mut entries = Vec::with_capacity(2 * graph.edges().len() + space.len());
    for &(x, y, b) in graph.edges() {
        let v = C::new(-b / (m[x] * m[y]), R::zero());
        entries.push((x, y, v));
        entries.push((y, x, v));
        degree[x] = degree[x] + b;
        degree[y] = degree[y] + b;
    }
    for (x, d) in degree.into_iter().enumerate() {
        if d > R::zero() {
            entries.push((x, x, C::new(d / (m[x] * m[x]), R::zero())));
        }
    }
    Kernel::from_entries(space, entries)
}

/// `(Ãw)(x)`.
pub fn apply_formal<R: Real>(kernel: &Kernel<R>, w: &VertexFunction<R>, x: usize) -> Result<C<R>> {
    w.ensure_on(kernel.space())?;
    kernel.space().check_index(x)?;
    let m = kernel.space().measure();
    Ok(kernel.row(x).iter().fold(czero(), |acc, &(y, a)| acc + a * w.values()[y] * m[y]))
}

/// `x ↦ (Ãw)(x)` on the whole space.
pub fn apply_formal_all<R: Real>(kernel: &Kernel<R>, w: &VertexFunction<R>) -> Result<VertexFunction<R>> {
    w.ensure_on(kernel.space())?;
    VertexFunction::new(kernel.space().clone(), kernel.apply_raw(w.values()))
}

/// `max_x |(Ãφ)(x) − λφ(x)|`.
pub fn eigen_residual<R: Real>(kernel: &Kernel<R>, phi: &VertexFunction<R>, lambda: R) -> Result<R> {
    let applied = apply_formal_all(kernel, phi)?;
    Ok(applied
        .values()
        .iter()
        .zip(phi.values())
        .map(|(&a, &p)| (a - p * lambda).norm())
        .fold(R::zero(), R::max))
}

/// Dimensionless scale `(1 + |λ|) · max|φ|` used to normalize residuals.
pub fn residual_scale<R: Real>(phi: &VertexFunction<R>, lambda: R) -> R {
    (R::one() + lambda.abs()) * phi.sup_norm()
}

/// Whether `φ` solves `(Ã − λ)φ = 0` to `tol` relative to [`residual_scale`].
pub fn is_generalized_eigenfunction<R: Real>(
    kernel: &Kernel<R>,
    phi: &VertexFunction<R>,
    lambda: R,
    tol: R,
) -> Result<bool> {
    Ok(eigen_residual(kernel, phi, lambda)? <= tol * residual_scale(phi, lambda))
}

/// Residual of `φ` as a `C_c(V)`-eigenfunction.
///
/// For every test function `δ_x` this evaluates the pairing
/// `(φ, (Ã − λ)δ_x)_m` by forming `(Ã − λ)δ_x` on its support and summing,
/// then normalizes by `m(x)`. Returns the maximum modulus over `x`. On a
/// locally finite Hermitian kernel this coincides with [`eigen_residual`].
pub fn cc_eigen_residual<R: Real>(kernel: &Kernel<R>, phi: &VertexFunction<R>, lambda: R) -> Result<R> {
    phi.ensure_on(kernel.space())?;
    let space = kernel.space();
    let m = space.measure();
    let mut worst = R::zero();
    for x in 0..space.len() {
        // (Ã δ_x)(y) = a(y, x) m(x) is nonzero only for y in the column
        // pattern of x, which equals the row pattern by Hermitian symmetry.
        let mut support: Vec<usize> = kernel.row(x).iter().map(|&(y, _)| y).collect();
        if support.binary_search(&x).is_err() {
            support.push(x);
            support.sort_unstable();
        }
        let mut pairing = czero::<R>();
        for &y in &support {
            let a_yx = kernel.entry(y, x);
            let mut value = a_yx * m[x];
            if y == x {
                value = value - C::new(lambda, R::zero());
            }
            pairing = pairing + phi.values()[y].conj() * value * m[y];
        }
        worst = worst.max(pairing.norm() / m[x]);
    }
    Ok(worst)
}

/// Symmetrized matrix `B = D^{1/2} A_m D^{-1/2}` with `D = diag(m)`.
///
/// `B` is Hermitian in the standard inner product; an eigenvector `ψ` of `B`
/// maps to the `ℓ²(V, m)`-normalized eigenfunction `D^{-1/2}ψ` of `Ã`.
pub fn assemble_matrix<R: Real>(kernel: &Kernel<R>) -> Result<HermitianMatrix<R>> {
    let n = kernel.space().len();
    let m = kernel.space().measure();
    let mut b = Matrix::zeros(n, n);
    for (x, y, a) in kernel.entries() {
        b[(x, y)] = a * m[y] * m[x].sqrt() / m[y].sqrt();
    }
    HermitianMatrix::new(b).map_err(|e| match e {
        Error::NonHermitian { x, y, gap } => Error::NonHermitian {
            x: kernel.space().id(x.parse().unwrap_or(0)).to_string(),
            y: kernel.space().id(y.parse().unwrap_or(0)).to_string(),
            gap,
        },
        other => other,
    })
}
