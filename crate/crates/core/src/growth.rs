//! Weights, smoothing operators and growth checks.
//!
//! A weight `ω` with `0 < ω ≤ 1` and `Σ ω² ≤ 1` gives `S = M_ω` (Hilbert–Schmidt
//! on `ℓ²(V, m)`) and `T = M_{1/ω}`. The spaces `H_+ = D(T)` and its dual
//! `H_−` are represented by their norms only: on a finite space every
//! inclusion is trivial and the quantitative bounds are what can be checked.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::calculus::Multiplier;
use crate::eigensolve::{eigendecompose, HermitianMatrix};
use crate::error::{Error, Result};
use crate::fibers::DirectIntegralDecomposition;
use crate::linalg::{Lu, Matrix};
use crate::operator::{assemble_matrix, Kernel};
use crate::scalar::{Real, C};
use crate::space::{raw_inner, weighted_norm_sq, DiscreteMeasureSpace, VertexFunction};

/// Vertex weights `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence<R> {
    omega: Vec<R>,
    sum_sq: R,
}

impl<R: Real> WeightSequence<R> {
    /// Requires `0 < ω(x) ≤ 1` and `Σ ω(x)² ≤ 1` (up to rounding).
    pub fn new(omega: Vec<R>) -> Result<Self> {
        for (i, &w) in omega.iter().enumerate() {
            if !(w > R::zero() && w <= R::one()) {
                return Err(Error::InvalidWeight { vertex: i.to_string(), value: w.as_f64() });
            }
        }
        let sum_sq = omega.iter().map(|&w| w * w).sum::<R>();
        if sum_sq > R::one() + R::lit(64.0) * R::epsilon() {
            return Err(Error::WeightNormalization(sum_sq.as_f64()));
        }
        Ok(Self { omega, sum_sq })
    }

    /// Only requires finite nonnegative entries. For homogeneity and
    /// degenerate-weight experiments.
    pub fn relaxed(omega: Vec<R>) -> Result<Self> {
        for (i, &w) in omega.iter().enumerate() {
            if !(w >= R::zero() && w.is_finite()) {
                return Err(Error::InvalidWeight { vertex: i.to_string(), value: w.as_f64() });
            }
        }
        let sum_sq = omega.iter().map(|&w| w * w).sum::<R>();
        Ok(Self { omega, sum_sq })
    }

    /// `ω(x_k) = c·r^k`, `k = 0..n`, with `c` chosen so that `Σ ω² = 1`.
    pub fn geometric(n: usize, ratio: R) -> Result<Self> {
        if !(ratio > R::zero() && ratio <= R::one()) {
            return Err(Error::InvalidArgument(format!("geometric ratio {} must lie in (0, 1]", ratio.as_f64())));
        }
        let mut powers = Vec::with_capacity(n);
        let mut p = R::one();
        for _ in 0..n {
            powers.push(p);
            p = p * ratio;
        }
        let total = powers.iter().map(|&w| w * w).sum::<R>();
        let c = R::one() / total.sqrt();
        Self::new(powers.into_iter().map(|w| (w * c).min(R::one())).collect())
    }

    /// Parses `vertex_id<TAB>omega` lines against `space`; every vertex must
    /// appear exactly once.
    pub fn parse(space: &DiscreteMeasureSpace<R>, text: &str) -> Result<Self> {
        let mut omega: Vec<Option<R>> = vec![None; space.len()];
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let mut parts = trimmed.split('\t');
            let (Some(id), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err("expected \"vertex_id<TAB>omega\"".into()));
            };
            let index = space.index_of(id.trim()).map_err(|e| parse_err(e.to_string()))?;
            let value: f64 = value.trim().parse().map_err(|_| parse_err(format!("invalid weight {value:?}")))?;
            if omega[index].is_some() {
                return Err(parse_err(format!("duplicate weight for vertex {id:?}")));
            }
            omega[index] = Some(R::lit(value));
        }
        let omega = omega
            .into_iter()
            .enumerate()
            .map(|(i, w)| w.ok_or_else(|| Error::InvalidArgument(format!("no weight for vertex {:?}", space.id(i)))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(omega)
    }

    pub fn values(&self) -> &[R] {
        &self.omega
    }

    pub fn sum_sq(&self) -> R {
        self.sum_sq
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn scaled(&self, t: R) -> Result<Self> {
        Self::relaxed(self.omega.iter().map(|&w| w * t).collect())
    }
}

/// `S = M_ω`, `T = M_{1/ω}` on a given space, with the `H_±` norms.
#[derive(Debug, Clone)]
pub struct SmoothingPair<R> {
    weight: WeightSequence<R>,
    space: Arc<DiscreteMeasureSpace<R>>,
}

impl<R: Real> SmoothingPair<R> {
    pub fn new(space: Arc<DiscreteMeasureSpace<R>>, weight: WeightSequence<R>) -> Result<Self> {
        if weight.len() != space.len() {
            return Err(Error::ShapeMismatch { expected: space.len(), found: weight.len() });
        }
        Ok(Self { weight, space })
    }

    pub fn weight(&self) -> &WeightSequence<R> {
        &self.weight
    }

    pub fn space(&self) -> &Arc<DiscreteMeasureSpace<R>> {
        &self.space
    }

    /// `S u = ω u`.
    pub fn apply_s(&self, u: &VertexFunction<R>) -> Result<VertexFunction<R>> {
        u.ensure_on(&self.space)?;
        let values = u.values().iter().zip(self.weight.values()).map(|(&v, &w)| v * w).collect();
        VertexFunction::new(self.space.clone(), values)
    }

    /// `T u = u / ω`; requires `ω > 0`.
    pub fn apply_t(&self, u: &VertexFunction<R>) -> Result<VertexFunction<R>> {
        u.ensure_on(&self.space)?;
        let values = u
            .values()
            .iter()
            .zip(self.weight.values())
            .enumerate()
            .map(|(i, (&v, &w))| {
                if w > R::zero() {
                    Ok(v / w)
                } else {
                    Err(Error::InvalidWeight { vertex: self.space.id(i).to_string(), value: w.as_f64() })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        VertexFunction::new(self.space.clone(), values)
    }

    /// `‖u‖²_+ = Σ |u|²/ω² m`.
    pub fn plus_norm_sq(&self, u: &VertexFunction<R>) -> Result<R> {
        Ok(self.apply_t(u)?.norm_sq())
    }

    /// `‖u‖²_− = Σ ω²|u|² m`.
    pub fn minus_norm_sq(&self, u: &VertexFunction<R>) -> Result<R> {
        weighted_norm_sq(u, self.weight.values(), &self.space)
    }

    /// `(|⟨v, u⟩_d|, ‖v‖_− ‖u‖_+)`: the duality pairing and its Cauchy–Schwarz bound.
    pub fn duality_bound(&self, v: &VertexFunction<R>, u: &VertexFunction<R>) -> Result<(R, R)> {
        v.ensure_on(&self.space)?;
        let pairing = raw_inner(v.values(), u.values(), self.space.measure()).norm();
        Ok((pairing, (self.minus_norm_sq(v)? * self.plus_norm_sq(u)?).sqrt()))
    }

    /// Largest `|ω(x)/ω(x) − 1|`: `TS` against the identity.
    pub fn ts_identity_gap(&self) -> R {
        self.weight
            .values()
            .iter()
            .filter(|&&w| w > R::zero())
            .map(|&w| ((R::one() / w) * w - R::one()).abs())
            .fold(R::zero(), R::max)
    }
}

/// `‖S‖²_HS = Σ ω²` (the measure cancels against the `m`-orthonormal basis).
pub fn hs_norm_sq<R: Real>(pair: &SmoothingPair<R>) -> R {
    pair.weight.sum_sq()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsGammaCheck<R> {
    /// `‖γ(L) S_b‖_HS` with `S_b = M_{ω b}`.
    pub hs: R,
    /// `sup_{λ ∈ spec(L)} |γ(λ)| · ‖S_b‖_HS`.
    pub bound: R,
}

impl<R: Real> HsGammaCheck<R> {
    pub fn holds(&self, slack: R) -> bool {
        self.hs <= self.bound + slack
    }
}

/// Hilbert–Schmidt norm of `γ(L) M_{ω b}` by dense linear algebra, against
/// `sup|γ| · ‖M_{ω b}‖_HS`. `b` defaults to `1`.
///
/// Conjugating by `D^{1/2}` turns `L` into the symmetrized matrix `B` and the
/// `m`-orthonormal basis `δ_x/√m(x)` into the standard one, so the norm is
/// `‖γ(B) diag(ω b)‖_F`. The resolvent `γ(s) = 1/(s+i)` is evaluated by an LU
/// solve with `B + iI`; other `γ` through the eigendecomposition of `B`.
pub fn hs_gamma_check<R: Real>(
    kernel: &Kernel<R>,
    pair: &SmoothingPair<R>,
    gamma: Multiplier,
    b: Option<&[R]>,
) -> Result<HsGammaCheck<R>> {
    if !Arc::ptr_eq(kernel.space(), pair.space()) && **kernel.space() != **pair.space() {
        return Err(Error::DomainMismatch);
    }
    let n = kernel.space().len();
    let scale: Vec<R> = match b {
        None => pair.weight.values().to_vec(),
        Some(b) if b.len() == n => pair.weight.values().iter().zip(b).map(|(&w, &bb)| w * bb).collect(),
        Some(b) => return Err(Error::ShapeMismatch { expected: n, found: b.len() }),
    };
    let s_hs = scale.iter().map(|&w| w * w).sum::<R>().sqrt();
    let h = assemble_matrix(kernel)?;
    let eig = eigendecompose(&h)?;
    let bound = gamma.sup_abs(eig.values()) * s_hs;

    let hs_sq = match gamma {
        Multiplier::Resolvent => resolvent_hs_sq(&h, &scale)?,
        _ => {
            let mut total = R::zero();
            for (k, &lambda) in eig.values().iter().enumerate() {
                let g = gamma.eval_checked(lambda)?.norm_sqr();
                let col = eig.vector(k);
                total = total + g * col.iter().zip(&scale).map(|(v, &w)| w * w * v.norm_sqr()).sum::<R>();
            }
            total
        }
    };
    Ok(HsGammaCheck { hs: hs_sq.sqrt(), bound })
}

fn resolvent_hs_sq<R: Real>(h: &HermitianMatrix<R>, scale: &[R]) -> Result<R> {
    let n = h.dim();
    let mut a: Matrix<R> = h.matrix().clone();
    for i in 0..n {
        a[(i, i)] = a[(i, i)] + C::new(R::zero(), R::one());
    }
    let lu = Lu::factor(a)?;
    let mut total = R::zero();
    for (x, &w) in scale.iter().enumerate() {
        if w == R::zero() {
            continue;
        }
        let mut e = vec![C::new(R::zero(), R::zero()); n];
        e[x] = C::new(w, R::zero());
        total = total + lu.solve(&e)?.iter().map(|v| v.norm_sqr()).sum::<R>();
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct COmegaCheck<R> {
    /// `max_{λ, j} Σ_x ω(x)² |φ_j(λ)(x)|² m(x)`.
    pub max_weighted_norm: R,
    /// `Σ_λ mass Σ_{j,n} |ω(n) ⟨φ_j(λ), v_n⟩|²` with `v_n = δ_n/√m(n)`.
    pub aggregate: R,
    /// `Σ ω²`.
    pub sum_sq: R,
}

impl<R: Real> COmegaCheck<R> {
    pub fn slack(&self) -> R {
        self.sum_sq - self.aggregate
    }

    pub fn holds(&self, tol: R) -> bool {
        self.aggregate <= self.sum_sq + tol
    }
}

/// Quantitative content of `H_λ ⊂ C_ω(V)`: weighted norms of the fiber
/// bases and the aggregate inequality over an `m`-orthonormal basis.
pub fn c_omega_inclusion_check<R: Real>(
    dec: &DirectIntegralDecomposition<R>,
    omega: &WeightSequence<R>,
) -> Result<COmegaCheck<R>> {
    let space = dec.space();
    if omega.len() != space.len() {
        return Err(Error::ShapeMismatch { expected: space.len(), found: omega.len() });
    }
    let m = space.measure();
    let w = omega.values();
    let mut max_weighted_norm = R::zero();
    let mut aggregate = R::zero();
    for (i, fiber) in dec.fibers().iter().enumerate() {
        let mass = dec.mass(i);
        for phi in fiber.basis() {
            max_weighted_norm = max_weighted_norm.max(weighted_norm_sq(phi, w, space)?);
            // |⟨φ, δ_n/√m(n)⟩|² = |φ(n)|² m(n).
            let term: R = phi.values().iter().zip(w).zip(m).map(|((v, &wn), &mn)| wn * wn * v.norm_sqr() * mn).sum();
            aggregate = aggregate + mass * term;
        }
    }
    Ok(COmegaCheck { max_weighted_norm, aggregate, sum_sq: omega.sum_sq() })
}

/// `Σ_x conj(φ(x)) f(x) m(x)`, the concrete sum behind `⟨φ, f⟩_d`.
pub fn fourier_coefficient<R: Real>(
    phi: &VertexFunction<R>,
    f: &VertexFunction<R>,
    space: &Arc<DiscreteMeasureSpace<R>>,
) -> Result<C<R>> {
    phi.ensure_on(space)?;
    f.ensure_on(space)?;
    Ok(raw_inner(phi.values(), f.values(), space.measure()))
}

/// A (possibly partial) metric on vertex indices; `None` means unreachable.
pub trait Metric<R> {
    fn distance(&self, x: usize, y: usize) -> Option<R>;
}

impl<R, F: Fn(usize, usize) -> Option<R>> Metric<R> for F {
    fn distance(&self, x: usize, y: usize) -> Option<R> {
        self(x, y)
    }
}

/// Shortest-path edge count, all pairs by breadth-first search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopMetric {
    n: usize,
    dist: Vec<u32>,
}

impl HopMetric {
    /// Errors on a disconnected graph.
    pub fn new(adjacency: &[Vec<usize>]) -> Result<Self> {
        let metric = Self::partial(adjacency);
        if metric.dist.contains(&u32::MAX) {
            return Err(Error::Disconnected);
        }
        Ok(metric)
    }

    /// Like [`HopMetric::new`] but keeps unreachable pairs as `None`.
    pub fn partial(adjacency: &[Vec<usize>]) -> Self {
        let n = adjacency.len();
        let mut dist = vec![u32::MAX; n * n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0;
            queue.push_back(s);
            while let Some(x) = queue.pop_front() {
                let d = row[x] + 1;
                for &y in &adjacency[x] {
                    if row[y] == u32::MAX {
                        row[y] = d;
                        queue.push_back(y);
                    }
                }
            }
        }
        Self { n, dist }
    }

    pub fn hops(&self, x: usize, y: usize) -> Option<u32> {
        let d = self.dist[x * self.n + y];
        (d != u32::MAX).then_some(d)
    }

    /// Largest finite distance.
    pub fn diameter(&self) -> u32 {
        self.dist.iter().copied().filter(|&d| d != u32::MAX).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

impl<R: Real> Metric<R> for HopMetric {
    fn distance(&self, x: usize, y: usize) -> Option<R> {
        self.hops(x, y).map(|d| R::lit(f64::from(d)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubexponentialNorms<R> {
    /// `(α, Σ_x e^{−2αϱ(x₀,x)} |φ(x)|² m(x))`.
    pub norms: Vec<(R, R)>,
    /// Vertices with no finite distance to `x₀`; they contribute zero.
    pub unreachable: Vec<usize>,
}

/// Weighted norms of `e^{−αϱ(x₀,·)} φ` for each `α`.
pub fn subexponential_check<R: Real, M: Metric<R> + ?Sized>(
    phi: &VertexFunction<R>,
    space: &Arc<DiscreteMeasureSpace<R>>,
    metric: &M,
    x0: usize,
    alphas: &[R],
) -> Result<SubexponentialNorms<R>> {
    phi.ensure_on(space)?;
    space.check_index(x0)?;
    if let Some(&a) = alphas.iter().find(|&&a| !(a > R::zero())) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", a.as_f64())));
    }
    let distances: Vec<Option<R>> = (0..space.len()).map(|x| metric.distance(x0, x)).collect();
    let unreachable = distances.iter().enumerate().filter(|(_, d)| d.is_none()).map(|(x, _)| x).collect();
    let norms = alphas
        .iter()
        .map(|&alpha| {
            let weights: Vec<R> = distances
                .iter()
                .map(|d| d.map_or(R::zero(), |d| (-alpha * d).exp()))
                .collect();
            weighted_norm_sq(phi, &weights, space).map(|v| (alpha, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubexponentialNorms { norms, unreachable })
}

/// `m(B(x, R))` for the closed ball.
pub fn ball_volume<R: Real, M: Metric<R> + ?Sized>(
    space: &DiscreteMeasureSpace<R>,
    metric: &M,
    x: usize,
    radius: R,
) -> Result<R> {
    if !(radius >= R::zero()) {
        return Err(Error::NegativeRadius(radius.as_f64()));
    }
    space.check_index(x)?;
    Ok((0..space.len())
        .filter(|&y| metric.distance(x, y).is_some_and(|d| d <= radius))
        .map(|y| space.measure()[y])
        .sum())
}
