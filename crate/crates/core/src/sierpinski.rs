//! Level-n Sierpinski gasket graphs, their Laplacians, and spectral
//! decimation measured by restriction.
//!
//! Vertices live on an integer lattice: level `n` has corners `(0,0)`,
//! `(2ⁿ,0)`, `(0,2ⁿ)`, and lattice point `(i, j)` sits at the plane point
//! `((i + j/2)/2ⁿ, (√3/2) j/2ⁿ)`. Level `n+1` is obtained by doubling the
//! coordinates and inserting the edge midpoints of every small triangle, so
//! the vertex list of level `n` is an index prefix of level `n+1` and
//! restriction `V_{n+1} → V_n` is truncation.

use std::collections::HashMap;
use std::sync::Arc;

use crate::eigensolve::{eigendecompose, EigenDecomposition};
use crate::error::{Error, Result};
use crate::growth::HopMetric;
use crate::linalg::{Lu, Matrix};
use crate::operator::{assemble_matrix, laplacian_from_graph, GraphSpec, Kernel};
use crate::scalar::{Real, C};
use crate::space::{raw_inner, DiscreteMeasureSpace};

pub const DEFAULT_LEVEL_CAP: usize = 6;

/// `|V_n| = 3(3ⁿ + 1)/2`.
pub fn vertex_count(level: usize) -> usize {
    3 * (3usize.pow(level as u32) + 1) / 2
}

/// `|E_n| = 3ⁿ⁺¹`.
pub fn edge_count(level: usize) -> usize {
    3usize.pow(level as u32 + 1)
}

#[derive(Debug, Clone)]
pub struct GasketGraph<R> {
    level: usize,
    space: Arc<DiscreteMeasureSpace<R>>,
    edges: Vec<(usize, usize)>,
    lattice: Vec<(u64, u64)>,
    triangles: Vec<[usize; 3]>,
}

impl<R: Real> GasketGraph<R> {
    fn base() -> Self {
        Self {
            level: 0,
            space: Arc::new(DiscreteMeasureSpace::uniform(3)),
            edges: vec![(0, 1), (0, 2), (1, 2)],
            lattice: vec![(0, 0), (1, 0), (0, 1)],
            triangles: vec![[0, 1, 2]],
        }
    }

    fn refine(&self) -> Self {
        let mut lattice: Vec<(u64, u64)> = self.lattice.iter().map(|&(i, j)| (2 * i, 2 * j)).collect();
        let mut index: HashMap<(u64, u64), usize> = lattice.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut midpoint = |a: usize, b: usize, lattice: &mut Vec<(u64, u64)>| {
            let p = ((lattice[a].0 + lattice[b].0) / 2, (lattice[a].1 + lattice[b].1) / 2);
            *index.entry(p).or_insert_with(|| {
                lattice.push(p);
                lattice.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(3 * self.triangles.len());
        let mut edges = Vec::with_capacity(3 * self.edges.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut lattice);
            let ac = midpoint(a, c, &mut lattice);
            let bc = midpoint(b, c, &mut lattice);
            for t in [[a, ab, ac], [ab, b, bc], [ac, bc, c]] {
                for (x, y) in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
                    edges.push((x.min(y), x.max(y)));
                }
                triangles.push(t);
            }
        }
        edges.sort_unstable();
        Self {
            level: self.level + 1,
            space: Arc::new(DiscreteMeasureSpace::uniform(lattice.len())),
            edges,
            lattice,
            triangles,
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn space(&self) -> &Arc<DiscreteMeasureSpace<R>> {
        &self.space
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    /// Lattice coordinates at this level.
    pub fn lattice(&self) -> &[(u64, u64)] {
        &self.lattice
    }

    /// Plane coordinates on the unit-side triangle.
    pub fn coordinates(&self) -> Vec<(f64, f64)> {
        let side = (1u64 << self.level) as f64;
        let h = 3f64.sqrt() / 2.0;
        self.lattice
            .iter()
            .map(|&(i, j)| ((i as f64 + j as f64 / 2.0) / side, h * j as f64 / side))
            .collect()
    }

    /// Indices of the three boundary vertices of `V₀`.
    pub fn corners(&self) -> [usize; 3] {
        [0, 1, 2]
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(x, y) in &self.edges {
            adj[x].push(y);
            adj[y].push(x);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        adj
    }

    pub fn degree(&self, x: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == x || b == x).count()
    }

    pub fn graph_spec(&self) -> GraphSpec<R> {
        let edges: Vec<_> = self.edges.iter().map(|&(x, y)| (x, y, R::one())).collect();
        GraphSpec::new(self.space.clone(), edges).expect("gasket edges are valid")
    }
}

/// Gasket levels `0..=level`, each refined from the previous one.
pub fn build_hierarchy<R: Real>(level: usize, cap: usize) -> Result<Vec<GasketGraph<R>>> {
    if level > cap {
        return Err(Error::LevelOverCap { level, cap });
    }
    let mut levels = vec![GasketGraph::base()];
    for _ in 0..level {
        let next = levels.last().expect("nonempty").refine();
        levels.push(next);
    }
    Ok(levels)
}

/// Level-`n` gasket, `0 ≤ n ≤` [`DEFAULT_LEVEL_CAP`].
pub fn build_gasket<R: Real>(level: usize) -> Result<GasketGraph<R>> {
    build_gasket_capped(level, DEFAULT_LEVEL_CAP)
}

pub fn build_gasket_capped<R: Real>(level: usize, cap: usize) -> Result<GasketGraph<R>> {
    Ok(build_hierarchy(level, cap)?.pop().expect("nonempty"))
}

/// Combinatorial Laplacian `Σ_{y∼x} (u(x) − u(y))`, unit weights and measure.
pub fn gasket_laplacian<R: Real>(g: &GasketGraph<R>) -> Kernel<R> {
    laplacian_from_graph(&g.graph_spec()).expect("gasket Laplacian is valid")
}

pub fn hop_metric<R: Real>(g: &GasketGraph<R>) -> Result<HopMetric> {
    HopMetric::new(&g.adjacency())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecimationOptions<R> {
    /// Restriction residual threshold for persistence.
    pub tol_decimate: R,
    /// A restriction with `‖φ|_{V_n}‖∞ ≤ zero_tol · ‖φ‖∞` counts as vanishing.
    pub zero_tol: R,
    /// Matching tolerance between the Rayleigh quotient and a coarse eigenvalue.
    pub tol_match: R,
    /// Quadratic-fit residual above which the closed form is flagged.
    pub tol_fit: R,
    pub cap: usize,
}

impl<R: Real> Default for DecimationOptions<R> {
    fn default() -> Self {
        Self {
            tol_decimate: R::lit(1e-8),
            zero_tol: R::lit(1e-8),
            tol_match: R::lit(1e-6),
            tol_fit: R::lit(1e-6),
            cap: DEFAULT_LEVEL_CAP,
        }
    }
}

/// One eigenpair of `Δ_{n+1}` restricted to `V_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecimationRecord<R> {
    /// The fine level `n + 1`.
    pub level: usize,
    pub eigen_index: usize,
    pub lambda: R,
    /// `‖φ|_{V_n}‖∞ / ‖φ‖∞`.
    pub restriction_norm: R,
    /// `‖Δ_n r − λ_n r‖∞ / ‖r‖∞`; `None` when the restriction vanishes.
    pub residual: Option<R>,
    /// Rayleigh quotient of the restriction.
    pub rayleigh: Option<R>,
    /// Nearest eigenvalue of `Δ_n` (set for persistent records).
    pub lambda_coarse: Option<R>,
    pub coarse_index: Option<usize>,
    pub persistent: bool,
    /// `|s_{n+1} − s_n| / |s_n − s_{n−1}|` along the restriction chain, when
    /// defined.
    pub increment_ratio: Option<R>,
}

/// Least-squares fit `λ_n ≈ a z² + b z + c` with `z = λ_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFit<R> {
    pub coefficients: [R; 3],
    pub max_residual: R,
    /// `max |λ_n − z(5 − z)|` over the fitted pairs.
    pub hypothesis_gap: R,
    pub points: usize,
    /// Fit residual and hypothesis gap both within the fit tolerance.
    pub confirmed: bool,
}

/// Restriction chain of one top-level eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct DecimationSeries<R> {
    pub eigen_index: usize,
    /// Ascending levels `m₀..=N`.
    pub levels: Vec<usize>,
    /// Rayleigh quotients `λ_m` of `φ|_{V_m}`.
    pub lambdas: Vec<R>,
    /// `s_m = 5^m λ_m`.
    pub s: Vec<R>,
    pub residuals: Vec<R>,
    /// `λ_{m+1} < λ_m` at every step of the chain.
    pub lower_branch: bool,
    /// Fitted geometric decay ratio of `|s_{m+1} − s_m|`.
    pub ratio: Option<R>,
}

impl<R: Real> DecimationSeries<R> {
    pub fn lowest_level(&self) -> usize {
        self.levels[0]
    }

    pub fn is_constant_mode(&self) -> bool {
        self.lambdas.iter().all(|l| l.abs() <= R::lit(1e-9))
    }

    pub fn increments(&self) -> Vec<R> {
        self.s.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
    }
}

/// Per-level data used by the decimation analysis.
#[derive(Debug, Clone)]
pub struct GasketLevel<R> {
    pub graph: GasketGraph<R>,
    pub kernel: Kernel<R>,
    pub eigen: EigenDecomposition<R>,
}

#[derive(Debug, Clone)]
pub struct DecimationAnalysis<R> {
    pub levels: Vec<GasketLevel<R>>,
    /// `records[n]` covers the transition `n → n+1`.
    pub records: Vec<Vec<DecimationRecord<R>>>,
    pub overall_fit: Option<QuadraticFit<R>>,
    /// Per-transition fits, aligned with `records`.
    pub transition_fits: Vec<Option<QuadraticFit<R>>>,
    /// Restriction chains of the top-level eigenpairs that persist at least one level.
    pub series: Vec<DecimationSeries<R>>,
    pub options: DecimationOptions<R>,
}

/// Rayleigh quotient and relative residual of `r` for the kernel.
fn restriction_quality<R: Real>(kernel: &Kernel<R>, r: &[C<R>]) -> (R, R) {
    let m = kernel.space().measure();
    let lr = kernel.apply_raw(r);
    let lambda = raw_inner(r, &lr, m).re / raw_inner(r, r, m).re;
    let sup = r.iter().fold(R::zero(), |a, v| a.max(v.norm()));
    let res = lr.iter().zip(r).fold(R::zero(), |a, (&x, &y)| a.max((x - y * lambda).norm()));
    (lambda, res / sup)
}

fn sup_norm<R: Real>(v: &[C<R>]) -> R {
    v.iter().fold(R::zero(), |a, x| a.max(x.norm()))
}

/// Restriction analysis for every transition `n → n+1` with `n < N`.
pub fn decimation_analysis<R: Real>(level: usize, options: &DecimationOptions<R>) -> Result<DecimationAnalysis<R>> {
    let graphs = build_hierarchy::<R>(level, options.cap)?;
    let levels = graphs
        .into_iter()
        .map(|graph| {
            let kernel = gasket_laplacian(&graph);
            let eigen = eigendecompose(&assemble_matrix(&kernel)?)?;
            Ok(GasketLevel { graph, kernel, eigen })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(level);
    for n in 0..level {
        let (coarse, fine) = (&levels[n], &levels[n + 1]);
        let nc = coarse.graph.len();
        let mut transition = Vec::with_capacity(fine.graph.len());
        for k in 0..fine.graph.len() {
            let phi = fine.eigen.vector(k);
            let lambda = fine.eigen.values()[k];
            let restriction_norm = sup_norm(&phi[..nc]) / sup_norm(&phi);
            let mut record = DecimationRecord {
                level: n + 1,
                eigen_index: k,
                lambda,
                restriction_norm,
                residual: None,
                rayleigh: None,
                lambda_coarse: None,
                coarse_index: None,
                persistent: false,
                increment_ratio: None,
            };
            if restriction_norm > options.zero_tol {
                let (rq, res) = restriction_quality(&coarse.kernel, &phi[..nc]);
                record.residual = Some(res);
                record.rayleigh = Some(rq);
                record.persistent = res <= options.tol_decimate;
                if record.persistent {
                    let (idx, &val) = coarse
                        .eigen
                        .values()
                        .iter()
                        .enumerate()
                        .min_by(|a, b| (*a.1 - rq).abs().partial_cmp(&(*b.1 - rq).abs()).expect("finite"))
                        .expect("nonempty level");
                    if (val - rq).abs() <= options.tol_match * (R::one() + rq.abs()) {
                        record.lambda_coarse = Some(val);
                        record.coarse_index = Some(idx);
                    }
                }
                if record.persistent && n >= 1 {
                    let (rq2, res2) = restriction_quality(&levels[n - 1].kernel, &phi[..levels[n - 1].graph.len()]);
                    let below = sup_norm(&phi[..levels[n - 1].graph.len()]) / sup_norm(&phi);
                    if below > options.zero_tol && res2 <= options.tol_decimate {
                        let five = R::lit(5.0);
                        let s2 = five.powi(n as i32 + 1) * lambda;
                        let s1 = five.powi(n as i32) * rq;
                        let s0 = five.powi(n as i32 - 1) * rq2;
                        if (s1 - s0).abs() > R::zero() {
                            record.increment_ratio = Some((s2 - s1).abs() / (s1 - s0).abs());
                        }
                    }
                }
            }
            transition.push(record);
        }
        records.push(transition);
    }

    let pairs = |recs: &[DecimationRecord<R>]| -> Vec<(R, R)> {
        recs.iter().filter(|r| r.persistent).filter_map(|r| r.rayleigh.map(|c| (r.lambda, c))).collect()
    };
    let transition_fits = records.iter().map(|t| fit_quadratic(&pairs(t), options.tol_fit)).collect();
    let all: Vec<(R, R)> = records.iter().flat_map(|t| pairs(t)).collect();
    let overall_fit = fit_quadratic(&all, options.tol_fit);

    let series = if level == 0 { Vec::new() } else { collect_series(&levels, options) };
    Ok(DecimationAnalysis { levels, records, overall_fit, transition_fits, series, options: *options })
}

fn chain<R: Real>(levels: &[GasketLevel<R>], eigen_index: usize, options: &DecimationOptions<R>) -> DecimationSeries<R> {
    let top = levels.len() - 1;
    let phi = levels[top].eigen.vector(eigen_index);
    let full = sup_norm(&phi);
    let mut lv = vec![top];
    let mut lambdas = vec![levels[top].eigen.values()[eigen_index]];
    let mut residuals = vec![restriction_quality(&levels[top].kernel, &phi).1];
    for m in (0..top).rev() {
        let r = &phi[..levels[m].graph.len()];
        if sup_norm(r) <= options.zero_tol * full {
            break;
        }
        let (rq, res) = restriction_quality(&levels[m].kernel, r);
        if res > options.tol_decimate {
            break;
        }
        lv.push(m);
        lambdas.push(rq);
        residuals.push(res);
    }
    lv.reverse();
    lambdas.reverse();
    residuals.reverse();
    let five = R::lit(5.0);
    let s: Vec<R> = lv.iter().zip(&lambdas).map(|(&m, &l)| five.powi(m as i32) * l).collect();
    let lower_branch = lambdas.windows(2).all(|w| w[1] < w[0]);
    let mut series =
        DecimationSeries { eigen_index, levels: lv, lambdas, s, residuals, lower_branch, ratio: None };
    series.ratio = increment_ratio(&series.increments(), noise_floor(&series.s));
    series
}

/// Increments below this are rounding noise (the constant mode has `s_m ≈ 0`).
fn noise_floor<R: Real>(s: &[R]) -> R {
    R::lit(1e-9) * (R::one() + s.iter().fold(R::zero(), |a, v| a.max(v.abs())))
}

fn collect_series<R: Real>(levels: &[GasketLevel<R>], options: &DecimationOptions<R>) -> Vec<DecimationSeries<R>> {
    let top = levels.len() - 1;
    (0..levels[top].graph.len())
        .map(|k| chain(levels, k, options))
        .filter(|s| s.levels.len() >= 2)
        .collect()
}

/// `e^{slope}` of the least-squares line through `(m, ln d_m)` over the
/// increments above `floor`; `None` with fewer than two.
pub fn increment_ratio<R: Real>(increments: &[R], floor: R) -> Option<R> {
    let pts: Vec<(R, R)> = increments
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > floor)
        .map(|(m, d)| (R::from_usize(m).unwrap_or_else(R::zero), d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = R::from_usize(pts.len()).unwrap_or_else(R::one);
    let mx = pts.iter().map(|p| p.0).sum::<R>() / n;
    let my = pts.iter().map(|p| p.1).sum::<R>() / n;
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<R>();
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<R>();
    Some((sxy / sxx).exp())
}

/// Least squares over `(z, λ_n)` pairs; `None` with fewer than three
/// distinct abscissae.
pub fn fit_quadratic<R: Real>(pairs: &[(R, R)], tol_fit: R) -> Option<QuadraticFit<R>> {
    let mut xs: Vec<R> = pairs.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    xs.dedup_by(|a, b| (*a - *b).abs() <= R::lit(1e-9) * (R::one() + b.abs()));
    if xs.len() < 3 {
        return None;
    }
    // Normal equations for the basis (z², z, 1).
    let mut ata = Matrix::<R>::zeros(3, 3);
    let mut atb = vec![C::new(R::zero(), R::zero()); 3];
    for &(z, y) in pairs {
        let row = [z * z, z, R::one()];
        for i in 0..3 {
            for j in 0..3 {
                ata[(i, j)] = ata[(i, j)] + C::new(row[i] * row[j], R::zero());
            }
            atb[i] = atb[i] + C::new(row[i] * y, R::zero());
        }
    }
    let sol = Lu::factor(ata).ok()?.solve(&atb).ok()?;
    let coefficients = [sol[0].re, sol[1].re, sol[2].re];
    let eval = |z: R| coefficients[0] * z * z + coefficients[1] * z + coefficients[2];
    let five = R::lit(5.0);
    let max_residual = pairs.iter().fold(R::zero(), |a, &(z, y)| a.max((eval(z) - y).abs()));
    let hypothesis_gap = pairs.iter().fold(R::zero(), |a, &(z, y)| a.max((z * (five - z) - y).abs()));
    Some(QuadraticFit {
        coefficients,
        max_residual,
        hypothesis_gap,
        points: pairs.len(),
        confirmed: max_residual <= tol_fit && hypothesis_gap <= tol_fit,
    })
}

/// One level of the pointwise identity `5ᵐ (Δ_m φ|_{V_m})(x) = s_m φ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseLevel<R> {
    pub level: usize,
    pub lhs: R,
    pub rhs: R,
    /// `|lhs − rhs| / ((1 + |s_m|) ‖φ|_{V_m}‖∞)`.
    pub scaled_gap: R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem5Report<R> {
    pub eigen_index: usize,
    pub vertex: usize,
    pub levels: Vec<usize>,
    pub s: Vec<R>,
    /// The same sequence under the negative-Laplacian sign convention.
    pub s_negative_convention: Vec<R>,
    pub pointwise: Vec<PointwiseLevel<R>>,
    pub increments: Vec<R>,
    pub ratio: Option<R>,
    pub lower_branch: bool,
}

impl<R: Real> Theorem5Report<R> {
    pub fn max_pointwise_gap(&self) -> R {
        self.pointwise.iter().fold(R::zero(), |a, p| a.max(p.scaled_gap))
    }

    /// Pointwise identity within `tol` at every level.
    pub fn pointwise_holds(&self, tol: R) -> bool {
        self.max_pointwise_gap() <= tol
    }

    /// Geometric decay within the envelope; vacuous without a fitted ratio.
    pub fn decay_holds(&self, envelope: R) -> bool {
        self.ratio.is_none_or(|r| r <= envelope)
    }
}

/// Renormalized sequence `s_m = 5ᵐ λ_m` of the restriction chain of
/// eigenpair `eigen_index` of `Δ_N` down to level `m0`, and the pointwise
/// identity at vertex `x ∈ V_{m0}`.
pub fn theorem5_check<R: Real>(
    analysis: &DecimationAnalysis<R>,
    eigen_index: usize,
    x: usize,
    m0: usize,
) -> Result<Theorem5Report<R>> {
    let levels = &analysis.levels;
    let top = levels.len() - 1;
    if m0 > top {
        return Err(Error::InvalidArgument(format!("coarse level {m0} exceeds top level {top}")));
    }
    if eigen_index >= levels[top].graph.len() {
        return Err(Error::VertexOutOfRange { index: eigen_index, len: levels[top].graph.len() });
    }
    levels[m0].graph.space().check_index(x)?;
    let full = chain(levels, eigen_index, &analysis.options);
    let start = full.levels.iter().position(|&m| m == m0).ok_or(Error::NonPersistent(m0))?;
    let phi = levels[top].eigen.vector(eigen_index);
    let five = R::lit(5.0);
    let mut pointwise = Vec::new();
    for (idx, &m) in full.levels.iter().enumerate().skip(start) {
        let r = &phi[..levels[m].graph.len()];
        let lr = levels[m].kernel.apply_raw(r);
        let sm = full.s[idx];
        let lhs = (lr[x] * five.powi(m as i32)).re;
        let rhs = (r[x] * sm).re;
        // Eigenvectors of a real symmetric matrix come out real up to a
        // global phase, which the QL route fixes to 1.
        let gap = (lr[x] * five.powi(m as i32) - r[x] * sm).norm();
        pointwise.push(PointwiseLevel {
            level: m,
            lhs,
            rhs,
            scaled_gap: gap / ((R::one() + sm.abs()) * sup_norm(r)),
        });
    }
    let s: Vec<R> = full.s[start..].to_vec();
    let increments: Vec<R> = s.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let lambdas = &full.lambdas[start..];
    Ok(Theorem5Report {
        eigen_index,
        vertex: x,
        levels: full.levels[start..].to_vec(),
        s_negative_convention: s.iter().map(|&v| -v).collect(),
        ratio: increment_ratio(&increments, noise_floor(&s)),
        lower_branch: lambdas.windows(2).all(|w| w[1] < w[0]),
        s,
        pointwise,
        increments,
    })
}

/// `Σ_{x ∈ V_n} e^{−2α ϱ(x₀, x)}` for the constant function, with `x₀` the
/// corner `0`, paired with a level-independent upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRow<R> {
    pub level: usize,
    pub alpha: R,
    pub norm: R,
    pub bound: R,
}

/// Level `n` is isometric to the corner sub-gasket of level `n+1` spanned by
/// `(0,0)`, `(2ⁿ,0)`, `(0,2ⁿ)`, so the levels form an increasing exhaustion of
/// the infinite one-sided gasket. The weighted norm of the constant function
/// is then nondecreasing in `n` and bounded by
/// `Σ_R (1 − e^{−2α}) e^{−2αR} · |V_{⌈log₂ R⌉}|`, which dominates the ball
/// volumes of the infinite gasket.
pub fn truncation_stability<R: Real>(levels: &[usize], alphas: &[R], cap: usize) -> Result<Vec<TruncationRow<R>>> {
    let top = levels.iter().copied().max().unwrap_or(0);
    let graphs = build_hierarchy::<R>(top, cap.max(top))?;
    let mut rows = Vec::new();
    for &alpha in alphas {
        if !(alpha > R::zero()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", alpha.as_f64())));
        }
        let bound = truncation_bound(alpha);
        for &level in levels {
            let metric = hop_metric(&graphs[level])?;
            let norm = (0..metric.len())
                .map(|x| (-(alpha + alpha) * R::lit(f64::from(metric.hops(0, x).expect("connected")))).exp())
                .sum();
            rows.push(TruncationRow { level, alpha, norm, bound });
        }
    }
    Ok(rows)
}

fn truncation_bound<R: Real>(alpha: R) -> R {
    let decay = (-(alpha + alpha)).exp();
    let mut total = R::zero();
    let mut r: u64 = 0;
    loop {
        let k = if r <= 1 { 0 } else { 64 - (r - 1).leading_zeros() } as i32;
        let vol = R::lit(1.5) * (R::lit(3.0).powi(k) + R::one());
        let term = (R::one() - decay) * decay.powi(r.min(i32::MAX as u64) as i32) * vol;
        total = total + term;
        if (r > 16 && term <= R::epsilon() * total) || r > 10_000_000 {
            break;
        }
        r += 1;
    }
    total
}

/// Radius, ball volume and `e^{−αR} m(B(x,R))` for `R = 0..=diam + extra`.
pub fn ball_profile<R: Real>(g: &GasketGraph<R>, x: usize, alpha: R, extra: u32) -> Result<Vec<(u32, R, R)>> {
    let metric = hop_metric(g)?;
    let diam = metric.diameter();
    (0..=diam + extra)
        .map(|r| {
            let rr = R::lit(f64::from(r));
            let vol = crate::growth::ball_volume(g.space(), &metric, x, rr)?;
            Ok((r, vol, (-alpha * rr).exp() * vol))
        })
        .collect()
}
