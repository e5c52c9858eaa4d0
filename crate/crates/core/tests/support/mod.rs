//! Shared generators and dense reference computations for the integration tests.
//!
//! The reference side goes through nalgebra only: it rebuilds the symmetrized
//! matrix from the kernel entries and never touches this crate's solvers.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use eigexpand::rng::stream;
use eigexpand::{laplacian_from_graph, Complex, Function, Graph, KernelF64, Multiplier, Space};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex>;

/// `B = D^{1/2} A D^{1/2}` with `A = (a(x, y))`, i.e. the matrix of `Ã` in the
/// `m`-orthonormal basis `δ_x / √m(x)`.
pub fn symmetrized(kernel: &KernelF64) -> CMat {
    let m = kernel.space().measure();
    let n = m.len();
    let mut b = CMat::zeros(n, n);
    for (x, y, v) in kernel.entries() {
        b[(x, y)] = v * (m[x] * m[y]).sqrt();
    }
    b
}

/// Eigenvalues (ascending) and `m`-orthonormal eigenvectors of `Ã`.
pub struct DenseSpectrum {
    pub values: Vec<f64>,
    pub b_vectors: CMat,
    pub sqrt_m: Vec<f64>,
}

pub fn dense_spectrum(kernel: &KernelF64) -> DenseSpectrum {
    let eig = SymmetricEigen::new(symmetrized(kernel));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let b_vectors = CMat::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let sqrt_m = kernel.space().measure().iter().map(|v| v.sqrt()).collect();
    DenseSpectrum { values, b_vectors, sqrt_m }
}

impl DenseSpectrum {
    /// `Φ(L)f = D^{-1/2} U Φ(Λ) U* D^{1/2} f`.
    pub fn apply(&self, phi: impl Fn(f64) -> Complex, f: &[Complex]) -> Vec<Complex> {
        let g = DVector::from_iterator(f.len(), f.iter().zip(&self.sqrt_m).map(|(v, s)| v * s));
        let mut c = self.b_vectors.adjoint() * g;
        for (k, ck) in c.iter_mut().enumerate() {
            *ck *= phi(self.values[k]);
        }
        let h = &self.b_vectors * c;
        h.iter().zip(&self.sqrt_m).map(|(v, s)| v / s).collect()
    }

    /// Spectral projector onto `[lo, hi]`, applied to `f`.
    pub fn project(&self, lo: f64, hi: f64, f: &[Complex]) -> Vec<Complex> {
        self.apply(|s| if s >= lo && s <= hi { one() } else { zero() }, f)
    }
}

/// `(Ã + i)^{-1} f` by an LU solve, without diagonalizing.
pub fn dense_resolvent(kernel: &KernelF64, f: &[Complex]) -> Vec<Complex> {
    let m = kernel.space().measure();
    let n = m.len();
    let mut a = CMat::zeros(n, n);
    for (x, y, v) in kernel.entries() {
        a[(x, y)] = v * m[y];
    }
    for i in 0..n {
        a[(i, i)] += Complex::new(0.0, 1.0);
    }
    let rhs = DVector::from_column_slice(f);
    a.lu().solve(&rhs).expect("A + i is invertible").iter().copied().collect()
}

/// `Ãf` straight from the defining sum.
pub fn dense_apply(kernel: &KernelF64, f: &[Complex]) -> Vec<Complex> {
    let m = kernel.space().measure();
    let mut out = vec![zero(); f.len()];
    for (x, y, v) in kernel.entries() {
        out[x] += v * f[y] * m[y];
    }
    out
}

/// Reference value of `Φ(L)f` for the multipliers used by the checks.
pub fn reference_apply(kernel: &KernelF64, spec: &DenseSpectrum, phi: Multiplier, f: &[Complex]) -> Vec<Complex> {
    match phi {
        Multiplier::Resolvent => dense_resolvent(kernel, f),
        Multiplier::Identity => dense_apply(kernel, f),
        _ => spec.apply(|s| phi.eval(s), f),
    }
}

pub fn zero() -> Complex {
    Complex::new(0.0, 0.0)
}

pub fn one() -> Complex {
    Complex::new(1.0, 0.0)
}

pub fn norm_m(f: &[Complex], m: &[f64]) -> f64 {
    f.iter().zip(m).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt()
}

pub fn dist_m(a: &[Complex], b: &[Complex], m: &[f64]) -> f64 {
    a.iter().zip(b).zip(m).map(|((x, y), w)| (x - y).norm_sqr() * w).sum::<f64>().sqrt()
}

/// A generated operator together with its source graph (when it has one).
#[derive(Clone)]
pub struct Case {
    pub space: Arc<Space>,
    pub kernel: KernelF64,
    pub edges: Vec<(usize, usize, f64)>,
}

pub fn rng(seed: u64, name: &str) -> ChaCha8Rng {
    stream(seed, name)
}

/// Random connected weighted graph: a random spanning tree plus extra edges,
/// measures uniform in `[0.1, 10]`, weights uniform in `[0.1, 10]`.
pub fn random_graph(rng: &mut impl Rng, n: usize) -> Case {
    let measure: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..=10.0)).collect();
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    let mut pairs = BTreeSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (a, b) = (labels[i], labels[j]);
        pairs.insert((a.min(b), a.max(b)));
    }
    let extra = rng.random_range(0..=n.min(3 * n / 2 + 1));
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<(usize, usize, f64)> = pairs.into_iter().map(|(a, b)| (a, b, rng.random_range(0.1..=10.0))).collect();
    graph_case(Space::indexed(measure).unwrap(), edges)
}

pub fn graph_case(space: Space, edges: Vec<(usize, usize, f64)>) -> Case {
    let space = Arc::new(space);
    let kernel = laplacian_from_graph(&Graph::new(space.clone(), edges.clone()).unwrap()).unwrap();
    Case { space, kernel, edges }
}

/// Random Hermitian kernel with complex off-diagonal entries on a random
/// connected pattern.
pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> Case {
    let pattern = random_graph(rng, n);
    let mut entries = Vec::new();
    for &(x, y, _) in &pattern.edges {
        let v = Complex::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        entries.push((x, y, v));
        entries.push((y, x, v.conj()));
    }
    for x in 0..n {
        entries.push((x, x, Complex::new(rng.random_range(-3.0..3.0), 0.0)));
    }
    let kernel = KernelF64::from_entries(pattern.space.clone(), entries).unwrap();
    Case { space: pattern.space, kernel, edges: Vec::new() }
}

/// Two disjoint copies of the same graph: every eigenvalue is at least double.
pub fn doubled(case: &Case) -> Case {
    let n = case.space.len();
    let measure: Vec<f64> = case.space.measure().iter().chain(case.space.measure()).copied().collect();
    let mut edges = case.edges.clone();
    edges.extend(case.edges.iter().map(|&(a, b, w)| (a + n, b + n, w)));
    graph_case(Space::indexed(measure).unwrap(), edges)
}

/// Complete graph `K_n` with unit weights and measures: spectrum `{0, n^(n−1)}`.
pub fn complete(n: usize) -> Case {
    let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b, 1.0))).collect();
    graph_case(Space::uniform(n), edges)
}

/// Star with `n` leaves, unit weights and measures: eigenvalue 1 of multiplicity `n − 1`.
pub fn star(n: usize) -> Case {
    graph_case(Space::uniform(n + 1), (1..=n).map(|k| (0, k, 1.0)).collect())
}

/// A degenerate case of the requested family and a size near `n`.
pub fn degenerate(rng: &mut impl Rng, family: usize, n: usize) -> Case {
    match family % 3 {
        0 => doubled(&random_graph(rng, n.max(2))),
        1 => complete(n.clamp(3, 40)),
        _ => star(n.clamp(3, 60)),
    }
}

pub fn random_values(rng: &mut impl Rng, n: usize) -> Vec<Complex> {
    (0..n).map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

pub fn function(space: &Arc<Space>, values: Vec<Complex>) -> Function {
    Function::new(space.clone(), values).unwrap()
}
