//! Direct-sum realization of the generalized eigenfunction expansion.
//!
//! For a Hermitian kernel on a finite space the spectral measure is atomic.
//! Each distinct eigenvalue `λ` carries a fiber `H_λ` spanned by generalized
//! eigenfunctions `φ_j(λ)`; the fiber inner product is *declared* by making
//! that basis orthonormal, so fiber elements are coefficient vectors in
//! `ℓ²(J)`. The transform `W` sends `f` to `λ ↦ (⟨φ_j(λ), f⟩)_j`.
//!
//! With unit masses (the default) the `φ_j(λ)` are `ℓ²(V, m)`-orthonormal.
//! With [`MassConvention::Multiplicity`] they are scaled by `mass^{-1/2}` so
//! `W` stays unitary.

use std::sync::Arc;

use crate::calculus::{apply_direct, Multiplier};
use crate::eigensolve::{eigendecompose_with, group_eigenvalues, EigenMethod, HermitianMatrix};
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, Matrix};
use crate::operator::{assemble_matrix, cc_eigen_residual, eigen_residual, residual_scale, Kernel};
use crate::scalar::{czero, Real, C};
use crate::space::{dual_pairing, raw_inner, CompactFunction, DiscreteMeasureSpace, VertexFunction};

/// Atomic spectral measure: strictly increasing atoms with positive masses.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure<R> {
    atoms: Vec<(R, R)>,
}

impl<R: Real> SpectralMeasure<R> {
    pub fn new(atoms: Vec<(R, R)>) -> Result<Self> {
        if atoms.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::InvalidArgument("spectral atoms must be strictly increasing".into()));
        }
        if let Some(&(l, mass)) = atoms.iter().find(|(_, mass)| !(*mass > R::zero() && mass.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "atom {} has nonpositive mass {}",
                l.as_f64(),
                mass.as_f64()
            )));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(R, R)] {
        &self.atoms
    }

    pub fn support(&self) -> Vec<R> {
        self.atoms.iter().map(|a| a.0).collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Basis of generalized eigenfunctions at one atom.
#[derive(Debug, Clone)]
pub struct Fiber<R> {
    lambda: R,
    basis: Vec<VertexFunction<R>>,
}

impl<R: Real> Fiber<R> {
    pub fn lambda(&self) -> R {
        self.lambda
    }

    pub fn basis(&self) -> &[VertexFunction<R>] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `(⟨φ_j, f⟩)_j`.
    pub fn coefficients(&self, f: &VertexFunction<R>) -> Vec<C<R>> {
        let m = f.space().measure();
        self.basis.iter().map(|phi| raw_inner(phi.values(), f.values(), m)).collect()
    }

    /// `Σ_j c_j φ_j` as a function on `V`.
    pub fn synthesize(&self, c: &[C<R>]) -> Vec<C<R>> {
        let n = self.basis.first().map_or(0, VertexFunction::len);
        let mut out = vec![czero(); n];
        for (phi, &cj) in self.basis.iter().zip(c) {
            for (o, &p) in out.iter_mut().zip(phi.values()) {
                *o = *o + cj * p;
            }
        }
        out
    }
}

/// How atom masses are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassConvention {
    /// Unit mass per distinct eigenvalue.
    #[default]
    Unit,
    /// Mass equal to the multiplicity.
    Multiplicity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionOptions<R> {
    pub tol_group: R,
    pub method: EigenMethod,
    pub masses: MassConvention,
}

impl<R: Real> Default for DecompositionOptions<R> {
    fn default() -> Self {
        Self { tol_group: R::lit(1e-8), method: EigenMethod::default(), masses: MassConvention::default() }
    }
}

/// Per-atom coefficient vectors, aligned with the fibers of a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberCoefficients<R> {
    blocks: Vec<Vec<C<R>>>,
}

impl<R: Real> FiberCoefficients<R> {
    pub fn new(blocks: Vec<Vec<C<R>>>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vec<C<R>>] {
        &self.blocks
    }

    pub fn block(&self, atom: usize) -> &[C<R>] {
        &self.blocks[atom]
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_gap(&self, other: &Self) -> Result<R> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::ShapeMismatch { expected: self.blocks.len(), found: other.blocks.len() });
        }
        let mut worst = R::zero();
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            if a.len() != b.len() {
                return Err(Error::ShapeMismatch { expected: a.len(), found: b.len() });
            }
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).norm());
            }
        }
        Ok(worst)
    }
}

/// Atomic direct-integral decomposition of the operator defined by a kernel.
#[derive(Debug, Clone)]
pub struct DirectIntegralDecomposition<R> {
    kernel: Kernel<R>,
    measure: SpectralMeasure<R>,
    fibers: Vec<Fiber<R>>,
    tol_group: R,
}

impl<R: Real> DirectIntegralDecomposition<R> {
    pub fn build(kernel: &Kernel<R>, tol_group: R) -> Result<Self> {
        Self::build_with(kernel, &DecompositionOptions { tol_group, ..Default::default() })
    }

    /// Eigensolve of the symmetrized matrix, grouping into distinct
    /// eigenvalues, and Gram–Schmidt re-orthonormalization inside each group.
    pub fn build_with(kernel: &Kernel<R>, options: &DecompositionOptions<R>) -> Result<Self> {
        let h = assemble_matrix(kernel)?;
        Self::from_matrix(kernel, &h, options)
    }

    pub(crate) fn from_matrix(kernel: &Kernel<R>, h: &HermitianMatrix<R>, options: &DecompositionOptions<R>) -> Result<Self> {
        let space = kernel.space();
        let eig = eigendecompose_with(h, options.method)?;
        let grouped = group_eigenvalues(eig.values(), options.tol_group)?;
        let functions = eig.eigenfunctions(space)?;
        let mut atoms = Vec::with_capacity(grouped.groups.len());
        let mut fibers = Vec::with_capacity(grouped.groups.len());
        for group in &grouped.groups {
            let raw: Vec<Vec<C<R>>> = group.indices.iter().map(|&k| functions[k].values().to_vec()).collect();
            let basis = orthonormalize(&raw, space.measure(), R::lit(1e-6));
            if basis.len() != raw.len() {
                return Err(Error::InvalidArgument(format!(
                    "eigenspace at {} lost rank during orthonormalization",
                    group.value.as_f64()
                )));
            }
            let mass = match options.masses {
                MassConvention::Unit => R::one(),
                MassConvention::Multiplicity => R::from_usize(basis.len()).unwrap_or_else(R::one),
            };
            let factor = R::one() / mass.sqrt();
            let basis = basis
                .into_iter()
                .map(|v| VertexFunction::new(space.clone(), v.into_iter().map(|x| x * factor).collect()))
                .collect::<Result<Vec<_>>>()?;
            atoms.push((group.value, mass));
            fibers.push(Fiber { lambda: group.value, basis });
        }
        Ok(Self { kernel: kernel.clone(), measure: SpectralMeasure::new(atoms)?, fibers, tol_group: options.tol_group })
    }

    /// Assembles a decomposition from explicit atoms `(λ, mass, basis)`.
    /// Only structural validity is checked; use the verification methods for
    /// the spectral identities.
    pub fn from_parts(kernel: Kernel<R>, parts: Vec<(R, R, Vec<VertexFunction<R>>)>, tol_group: R) -> Result<Self> {
        let space = kernel.space().clone();
        let mut atoms = Vec::with_capacity(parts.len());
        let mut fibers = Vec::with_capacity(parts.len());
        let mut total = 0;
        for (lambda, mass, basis) in parts {
            for phi in &basis {
                phi.ensure_on(&space)?;
            }
            total += basis.len();
            atoms.push((lambda, mass));
            fibers.push(Fiber { lambda, basis });
        }
        if total != space.len() {
            return Err(Error::ShapeMismatch { expected: space.len(), found: total });
        }
        Ok(Self { kernel, measure: SpectralMeasure::new(atoms)?, fibers, tol_group })
    }

    pub fn kernel(&self) -> &Kernel<R> {
        &self.kernel
    }

    pub fn space(&self) -> &Arc<DiscreteMeasureSpace<R>> {
        self.kernel.space()
    }

    pub fn measure(&self) -> &SpectralMeasure<R> {
        &self.measure
    }

    pub fn fibers(&self) -> &[Fiber<R>] {
        &self.fibers
    }

    pub fn tol_group(&self) -> R {
        self.tol_group
    }

    pub fn mass(&self, atom: usize) -> R {
        self.measure.atoms[atom].1
    }

    pub fn total_dim(&self) -> usize {
        self.fibers.iter().map(Fiber::dim).sum()
    }

    /// Index of the atom within `tol_group · (1 + |λ|)` of `lambda`.
    pub fn atom_index(&self, lambda: R) -> Option<usize> {
        let tol = self.tol_group * (R::one() + lambda.abs());
        self.fibers.iter().position(|f| (f.lambda - lambda).abs() <= tol)
    }

    /// Replaces each fiber basis by `φ'_k = Σ_j U[j][k] φ_j`.
    pub fn with_rotated_bases(&self, unitaries: &[Matrix<R>]) -> Result<Self> {
        if unitaries.len() != self.fibers.len() {
            return Err(Error::ShapeMismatch { expected: self.fibers.len(), found: unitaries.len() });
        }
        let mut out = self.clone();
        for (fiber, u) in out.fibers.iter_mut().zip(unitaries) {
            let d = fiber.dim();
            if u.rows() != d || u.cols() != d {
                return Err(Error::ShapeMismatch { expected: d, found: u.rows() });
            }
            let rotated = (0..d)
                .map(|k| {
                    let col = u.column(k);
                    VertexFunction::new(self.space().clone(), fiber.synthesize(&col))
                })
                .collect::<Result<Vec<_>>>()?;
            fiber.basis = rotated;
        }
        Ok(out)
    }

    /// `Wf`.
    pub fn transform(&self, f: &VertexFunction<R>) -> Result<FiberCoefficients<R>> {
        f.ensure_on(self.space())?;
        Ok(FiberCoefficients { blocks: self.fibers.iter().map(|fb| fb.coefficients(f)).collect() })
    }

    /// `W* c = Σ_λ mass(λ) Σ_j c_λ(j) φ_j(λ)`.
    pub fn inverse_transform(&self, c: &FiberCoefficients<R>) -> Result<VertexFunction<R>> {
        self.check_shape(c)?;
        let mut out = vec![czero(); self.space().len()];
        for (i, (fiber, block)) in self.fibers.iter().zip(&c.blocks).enumerate() {
            let mass = self.mass(i);
            for (o, v) in out.iter_mut().zip(fiber.synthesize(block)) {
                *o = *o + v * mass;
            }
        }
        VertexFunction::new(self.space().clone(), out)
    }

    /// `M_Φ c`: multiplies each fiber block by `Φ(λ)`.
    pub fn multiply(&self, phi: Multiplier, c: &FiberCoefficients<R>) -> Result<FiberCoefficients<R>> {
        self.check_shape(c)?;
        let blocks = self
            .fibers
            .iter()
            .zip(&c.blocks)
            .map(|(fiber, block)| {
                let p = phi.eval_checked(fiber.lambda)?;
                Ok(block.iter().map(|&x| p * x).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FiberCoefficients { blocks })
    }

    /// `Φ(L)f = W* M_Φ W f`.
    pub fn functional_calculus(&self, phi: Multiplier, f: &VertexFunction<R>) -> Result<VertexFunction<R>> {
        let c = self.transform(f)?;
        self.inverse_transform(&self.multiply(phi, &c)?)
    }

    /// `Σ_j φ_j(λ) ⟨φ_j(λ), f⟩ · mass`, the spectral projection onto one atom.
    pub fn project(&self, atom: usize, f: &VertexFunction<R>) -> Result<VertexFunction<R>> {
        f.ensure_on(self.space())?;
        let fiber = self.fibers.get(atom).ok_or(Error::VertexOutOfRange { index: atom, len: self.fibers.len() })?;
        let mass = self.mass(atom);
        let values = fiber.synthesize(&fiber.coefficients(f)).into_iter().map(|v| v * mass).collect();
        VertexFunction::new(self.space().clone(), values)
    }

    /// `Σ_λ mass · ‖c_λ‖²`.
    pub fn coefficient_norm_sq(&self, c: &FiberCoefficients<R>) -> Result<R> {
        self.check_shape(c)?;
        Ok(c.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| self.mass(i) * b.iter().map(|x| x.norm_sqr()).sum::<R>())
            .sum())
    }

    fn check_shape(&self, c: &FiberCoefficients<R>) -> Result<()> {
        if c.blocks.len() != self.fibers.len() {
            return Err(Error::ShapeMismatch { expected: self.fibers.len(), found: c.blocks.len() });
        }
        for (fiber, block) in self.fibers.iter().zip(&c.blocks) {
            if block.len() != fiber.dim() {
                return Err(Error::ShapeMismatch { expected: fiber.dim(), found: block.len() });
            }
        }
        Ok(())
    }

    /// Residuals of every basis element as a generalized eigenfunction and
    /// as a `C_c(V)`-eigenfunction.
    pub fn fiber_residuals(&self) -> Result<Vec<FiberResidual<R>>> {
        let mut out = Vec::with_capacity(self.total_dim());
        for (atom, fiber) in self.fibers.iter().enumerate() {
            for (index, phi) in fiber.basis.iter().enumerate() {
                out.push(FiberResidual {
                    atom,
                    index,
                    lambda: fiber.lambda,
                    eigen: eigen_residual(&self.kernel, phi, fiber.lambda)?,
                    cc: cc_eigen_residual(&self.kernel, phi, fiber.lambda)?,
                    scale: residual_scale(phi, fiber.lambda),
                });
            }
        }
        Ok(out)
    }

    /// Largest deviation of `mass · ⟨φ_j, φ_k⟩_{ℓ²(V,m)}` from `δ_jk`: the
    /// declared fiber inner product against the ambient one.
    pub fn basis_gram_deviation(&self) -> R {
        let m = self.space().measure();
        let mut worst = R::zero();
        for (i, fiber) in self.fibers.iter().enumerate() {
            let mass = self.mass(i);
            for (j, a) in fiber.basis.iter().enumerate() {
                for (k, b) in fiber.basis.iter().enumerate() {
                    let g = raw_inner(a.values(), b.values(), m) * mass;
                    let target = if j == k { R::one() } else { R::zero() };
                    worst = worst.max((g - C::new(target, R::zero())).norm());
                }
            }
        }
        worst
    }

    /// Rank of `{W_λ δ_x : x ∈ V}` in each fiber, paired with the fiber dimension.
    pub fn completeness_ranks(&self) -> Vec<(usize, usize)> {
        let n = self.space().len();
        let m = self.space().measure();
        self.fibers
            .iter()
            .map(|fiber| {
                // ⟨φ_j, δ_x⟩ = conj(φ_j(x)) m(x).
                let columns: Vec<Vec<C<R>>> = (0..n)
                    .map(|x| fiber.basis.iter().map(|phi| phi.values()[x].conj() * m[x]).collect())
                    .collect();
                let ones = vec![R::one(); fiber.dim()];
                (orthonormalize(&columns, &ones, R::lit(1e-8)).len(), fiber.dim())
            })
            .collect()
    }
}

/// Residuals of one fiber basis element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberResidual<R> {
    pub atom: usize,
    pub index: usize,
    pub lambda: R,
    /// `max_x |(Ã − λ)φ(x)|`.
    pub eigen: R,
    /// `max_x |(φ, (Ã − λ)δ_x)_m| / m(x)`.
    pub cc: R,
    /// `(1 + |λ|) · max|φ|`.
    pub scale: R,
}

/// Both sides of an identity and their distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison<T, R> {
    pub lhs: T,
    pub rhs: T,
    pub abs_gap: R,
}

fn direct_or_decomposed<R: Real>(
    dec: &DirectIntegralDecomposition<R>,
    phi: Multiplier,
    f: &VertexFunction<R>,
) -> Result<VertexFunction<R>> {
    match apply_direct(dec.kernel(), phi, f)? {
        Some(v) => Ok(v),
        None => dec.functional_calculus(phi, f),
    }
}

/// `‖Φ(L)f‖²` against `Σ_λ mass |Φ(λ)|² ‖W_λ f‖²`.
pub fn plancherel_check<R: Real>(
    dec: &DirectIntegralDecomposition<R>,
    f: &VertexFunction<R>,
    phi: Multiplier,
) -> Result<Comparison<R, R>> {
    let lhs = dec.functional_calculus(phi, f)?.norm_sq();
    let c = dec.transform(f)?;
    let mut rhs = R::zero();
    for (i, (fiber, block)) in dec.fibers().iter().zip(c.blocks()).enumerate() {
        let p = phi.eval_checked(fiber.lambda())?.norm_sqr();
        rhs = rhs + dec.mass(i) * p * block.iter().map(|x| x.norm_sqr()).sum::<R>();
    }
    Ok(Comparison { lhs, rhs, abs_gap: (lhs - rhs).abs() })
}

/// `‖W Φ(L) f − M_Φ W f‖` in the fiber norm, with `Φ(L)f` computed without
/// the decomposition whenever a direct route exists.
pub fn intertwining_gap<R: Real>(
    dec: &DirectIntegralDecomposition<R>,
    f: &VertexFunction<R>,
    phi: Multiplier,
) -> Result<R> {
    let left = dec.transform(&direct_or_decomposed(dec, phi, f)?)?;
    let right = dec.multiply(phi, &dec.transform(f)?)?;
    let diff = FiberCoefficients::new(
        left.blocks()
            .iter()
            .zip(right.blocks())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect(),
    );
    Ok(dec.coefficient_norm_sq(&diff)?.sqrt())
}

/// Result of the fiber-pairing identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingCheck<R> {
    /// `⟨Φ(L)u, g⟩`.
    pub lhs: C<R>,
    /// `Σ_λ mass · (Φ(λ) Wu(λ), g)_m` with ordinary scalar multiplication,
    /// i.e. `Σ_λ mass · conj(Φ(λ)) (Wu(λ), g)_m`.
    pub rhs: C<R>,
    pub abs_gap: R,
    /// Gap for the variant `Σ_λ mass · Φ(λ) (Wu(λ), g)_m`, which differs
    /// whenever `Φ` takes non-real values.
    pub unconjugated_gap: R,
}

/// `⟨Φ(L)u, g⟩ = Σ_λ mass · (Φ(λ) Wu(λ), g)_m`, where `Wu(λ) = Σ_j c_j φ_j`
/// is the fiber element viewed as a function on `V`.
pub fn pairing_identity_check<R: Real>(
    dec: &DirectIntegralDecomposition<R>,
    u: &VertexFunction<R>,
    g: &CompactFunction<R>,
    phi: Multiplier,
) -> Result<PairingCheck<R>> {
    g.function().ensure_on(dec.space())?;
    let applied = direct_or_decomposed(dec, phi, u)?;
    // ⟨v, g⟩ = conj((g, v)_m) over the support of g.
    let lhs = dual_pairing(&applied, g)?;
    let c = dec.transform(u)?;
    let mut rhs = czero::<R>();
    let mut alt = czero::<R>();
    for (i, (fiber, block)) in dec.fibers().iter().zip(c.blocks()).enumerate() {
        let p = phi.eval_checked(fiber.lambda())?;
        let wu = VertexFunction::new(dec.space().clone(), fiber.synthesize(block))?;
        let pairing = dual_pairing(&wu, g)?;
        let mass = dec.mass(i);
        rhs = rhs + p.conj() * pairing * mass;
        alt = alt + p * pairing * mass;
    }
    Ok(PairingCheck { lhs, rhs, abs_gap: (lhs - rhs).norm(), unconjugated_gap: (lhs - alt).norm() })
}

/// `⟨g, Φ(L)f⟩ = Σ_λ mass · Φ(λ) (W_λ g, f)_m` with the dual pairing of the
/// fiber element `W_λ g` (as a function on `V`) against `f`.
pub fn adjoint_pairing_check<R: Real>(
    dec: &DirectIntegralDecomposition<R>,
    g: &VertexFunction<R>,
    f: &CompactFunction<R>,
    phi: Multiplier,
) -> Result<Comparison<C<R>, R>> {
    let applied = direct_or_decomposed(dec, phi, f.function())?;
    let m = dec.space().measure();
    let lhs = raw_inner(g.values(), applied.values(), m);
    let c = dec.transform(g)?;
    let mut rhs = czero::<R>();
    for (i, (fiber, block)) in dec.fibers().iter().zip(c.blocks()).enumerate() {
        let wg = VertexFunction::new(dec.space().clone(), fiber.synthesize(block))?;
        rhs = rhs + phi.eval_checked(fiber.lambda())? * dual_pairing(&wg, f)? * dec.mass(i);
    }
    Ok(Comparison { lhs, rhs, abs_gap: (lhs - rhs).norm() })
}

/// `max_{λ,j} |⟨φ_j(λ), Ãf⟩ − λ ⟨φ_j(λ), f⟩|`.
pub fn corollary22_check<R: Real>(dec: &DirectIntegralDecomposition<R>, f: &VertexFunction<R>) -> Result<R> {
    f.ensure_on(dec.space())?;
    let lf = VertexFunction::new(dec.space().clone(), dec.kernel().apply_raw(f.values()))?;
    let mut worst = R::zero();
    for fiber in dec.fibers() {
        for (a, b) in fiber.coefficients(&lf).into_iter().zip(fiber.coefficients(f)) {
            worst = worst.max((a - b * fiber.lambda()).norm());
        }
    }
    Ok(worst)
}

/// Kernel `w(λ, y, x) = Σ_j φ_j(λ)(y) conj(φ_j(λ)(x))` for every atom.
///
/// `x ↦ w(λ, x, y)` is a generalized eigenfunction for each `y`, and
/// `⟨g, Φ(L)f⟩ = Σ_λ mass · Φ(λ) Σ_{x,y} conj(g(y)) w(λ, y, x) f(x) m(x) m(y)`.
/// For `m ≡ 1` this is the measure-free display verbatim.
#[derive(Debug, Clone)]
pub struct SpectralKernel<R> {
    lambdas: Vec<R>,
    masses: Vec<R>,
    measure: Vec<R>,
    blocks: Vec<Matrix<R>>,
}

impl<R: Real> SpectralKernel<R> {
    pub fn lambdas(&self) -> &[R] {
        &self.lambdas
    }

    /// `w(λ_atom, y, x)`.
    pub fn value(&self, atom: usize, y: usize, x: usize) -> C<R> {
        self.blocks[atom][(y, x)]
    }

    /// `m(y) m(x) w(λ_atom, y, x)`: the kernel with the measure absorbed, for
    /// which the display holds with plain sums over `x, y`.
    pub fn weighted_value(&self, atom: usize, y: usize, x: usize) -> C<R> {
        self.blocks[atom][(y, x)] * self.measure[y] * self.measure[x]
    }

    /// `x ↦ w(λ_atom, x, y)`.
    pub fn section(&self, space: &Arc<DiscreteMeasureSpace<R>>, atom: usize, y: usize) -> Result<VertexFunction<R>> {
        let n = self.measure.len();
        VertexFunction::new(space.clone(), (0..n).map(|x| self.blocks[atom][(x, y)]).collect())
    }

    /// Right-hand side of the kernel display.
    pub fn pairing(&self, g: &VertexFunction<R>, phi: Multiplier, f: &VertexFunction<R>) -> Result<C<R>> {
        let n = self.measure.len();
        let m = &self.measure;
        let mut total = czero::<R>();
        for (atom, block) in self.blocks.iter().enumerate() {
            let mut inner = czero::<R>();
            for y in 0..n {
                let gy = g.values()[y].conj() * m[y];
                if gy == czero() {
                    continue;
                }
                let row = (0..n).fold(czero::<R>(), |acc, x| acc + block[(y, x)] * f.values()[x] * m[x]);
                inner = inner + gy * row;
            }
            total = total + phi.eval_checked(self.lambdas[atom])? * inner * self.masses[atom];
        }
        Ok(total)
    }
}

pub fn spectral_kernel<R: Real>(dec: &DirectIntegralDecomposition<R>) -> SpectralKernel<R> {
    let n = dec.space().len();
    let blocks = dec
        .fibers()
        .iter()
        .map(|fiber| {
            let mut w = Matrix::zeros(n, n);
            for phi in fiber.basis() {
                let v = phi.values();
                for y in 0..n {
                    for x in 0..n {
                        w[(y, x)] = w[(y, x)] + v[y] * v[x].conj();
                    }
                }
            }
            w
        })
        .collect();
    SpectralKernel {
        lambdas: dec.measure().support(),
        masses: dec.measure().atoms().iter().map(|a| a.1).collect(),
        measure: dec.space().measure().to_vec(),
        blocks,
    }
}

/// Outcome of comparing two decompositions of the same operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessReport<R> {
    /// Largest atom displacement; infinite when the atom counts differ.
    pub atom_gap: R,
    /// Sine of the largest principal angle between `span{W_λ v_k}` in the
    /// two decompositions, over all atoms.
    pub max_sin_angle: R,
    /// Largest entrywise gap between the fiber Gram matrices
    /// `[⟨W_λ v_j, W_λ v_k⟩_{H_λ}]`.
    pub gram_gap: R,
}

impl<R: Real> UniquenessReport<R> {
    pub fn max_gap(&self) -> R {
        self.atom_gap.max(self.max_sin_angle).max(self.gram_gap)
    }
}

/// Compares two decompositions of the same kernel on a family of test
/// functions (typically the `δ_x`): the fiber subspaces spanned by the
/// transformed test functions and the Gram data must coincide.
pub fn uniqueness_compare<R: Real>(
    a: &DirectIntegralDecomposition<R>,
    b: &DirectIntegralDecomposition<R>,
    basis: &[CompactFunction<R>],
) -> Result<UniquenessReport<R>> {
    if !a.kernel().same_as(b.kernel()) {
        return Err(Error::KernelMismatch);
    }
    for v in basis {
        v.function().ensure_on(a.space())?;
    }
    if a.fibers().len() != b.fibers().len() {
        return Ok(UniquenessReport { atom_gap: R::infinity(), max_sin_angle: R::one(), gram_gap: R::infinity() });
    }
    let tol = a.tol_group().max(b.tol_group());
    let m = a.space().measure();
    let mut report = UniquenessReport { atom_gap: R::zero(), max_sin_angle: R::zero(), gram_gap: R::zero() };
    for (fa, fb) in a.fibers().iter().zip(b.fibers()) {
        let shift = (fa.lambda() - fb.lambda()).abs();
        report.atom_gap = report.atom_gap.max(shift);
        if shift > tol * (R::one() + fa.lambda().abs()) || fa.dim() != fb.dim() {
            report.atom_gap = R::infinity();
            return Ok(report);
        }
        let coeffs = |fiber: &Fiber<R>| -> Result<Vec<Vec<C<R>>>> {
            basis
                .iter()
                .map(|v| fiber.basis().iter().map(|phi| dual_pairing(phi, v)).collect())
                .collect()
        };
        let ca = coeffs(fa)?;
        let cb = coeffs(fb)?;

        for (j, (xa, xb)) in ca.iter().zip(&cb).enumerate() {
            for (ya, yb) in ca.iter().zip(&cb).skip(j) {
                let ga = ya.iter().zip(xa).fold(czero::<R>(), |acc, (y, x)| acc + x.conj() * y);
                let gb = yb.iter().zip(xb).fold(czero::<R>(), |acc, (y, x)| acc + x.conj() * y);
                report.gram_gap = report.gram_gap.max((ga - gb).norm());
            }
        }

        let span = |fiber: &Fiber<R>, c: &[Vec<C<R>>]| {
            let vectors: Vec<Vec<C<R>>> = c.iter().map(|ck| fiber.synthesize(ck)).collect();
            orthonormalize(&vectors, m, R::lit(1e-8))
        };
        let qa = span(fa, &ca);
        let qb = span(fb, &cb);
        if qa.len() != qb.len() {
            report.max_sin_angle = R::one();
            continue;
        }
        let sin = max_sin_angle(&qa, &qb, m)?.max(max_sin_angle(&qb, &qa, m)?);
        report.max_sin_angle = report.max_sin_angle.max(sin);
    }
    Ok(report)
}

/// `‖(I − P_b) Q_a‖₂` for `m`-orthonormal `Q_a`, `Q_b`: the sine of the
/// largest principal angle.
fn max_sin_angle<R: Real>(qa: &[Vec<C<R>>], qb: &[Vec<C<R>>], m: &[R]) -> Result<R> {
    if qa.is_empty() {
        return Ok(R::zero());
    }
    let residuals: Vec<Vec<C<R>>> = qa
        .iter()
        .map(|x| {
            let mut r = x.clone();
            for q in qb {
                let c = raw_inner(q, x, m);
                for (ri, &qi) in r.iter_mut().zip(q) {
                    *ri = *ri - c * qi;
                }
            }
            r
        })
        .collect();
    let k = residuals.len();
    let mut gram = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = raw_inner(&residuals[i], &residuals[j], m);
        }
    }
    let largest = eigendecompose_with(&HermitianMatrix::new(gram)?, EigenMethod::default())?
        .values()
        .last()
        .copied()
        .unwrap_or_else(R::zero);
    Ok(largest.max(R::zero()).sqrt().min(R::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{laplacian_from_graph, GraphSpec};

    fn graph(n: usize, edges: &[(usize, usize)]) -> Kernel<f64> {
        let sp = Arc::new(DiscreteMeasureSpace::uniform(n));
        let edges: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0f64)).collect();
        laplacian_from_graph(&GraphSpec::new(sp, edges).unwrap()).unwrap()
    }

    fn real(space: &Arc<DiscreteMeasureSpace<f64>>, v: &[f64]) -> VertexFunction<f64> {
        VertexFunction::from_real(space.clone(), v).unwrap()
    }

    #[test]
    fn k2_fibers() {
        let dec = DirectIntegralDecomposition::build(&graph(2, &[(0, 1)]), 1e-8).unwrap();
        let atoms = dec.measure().atoms();
        assert_eq!(atoms.len(), 2);
        assert!(atoms[0].0.abs() < 1e-15 && (atoms[1].0 - 2.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p0 = dec.fibers()[0].basis()[0].values();
        assert!((p0[0].norm() - s).abs() < 1e-15 && (p0[0] - p0[1]).norm() < 1e-15);
        let p2 = dec.fibers()[1].basis()[0].values();
        assert!((p2[0] + p2[1]).norm() < 1e-15);

        let f = real(dec.space(), &[1.0, 0.0]);
        let c = dec.transform(&f).unwrap();
        assert!((c.block(0)[0].norm() - s).abs() < 1e-15);
        assert!((c.block(1)[0].norm() - s).abs() < 1e-15);

        let lf = dec.functional_calculus(Multiplier::Identity, &f).unwrap();
        assert!((lf.values()[0].re - 1.0).abs() < 1e-14 && (lf.values()[1].re + 1.0).abs() < 1e-14);
        let e = dec.functional_calculus(Multiplier::ExpNeg(1.0), &f).unwrap();
        assert!((e.norm_sq() - (1.0 + (-4.0f64).exp()) / 2.0).abs() < 1e-14);

        let p = plancherel_check(&dec, &f, Multiplier::Indicator(1.5, 2.5)).unwrap();
        assert!((p.lhs - 0.5).abs() < 1e-14 && (p.rhs - 0.5).abs() < 1e-14);
        let p = plancherel_check(&dec, &f, Multiplier::ExpNeg(1.0)).unwrap();
        assert!(p.abs_gap <= 1e-12 && (p.lhs - 0.509158).abs() < 1e-6);
    }

    #[test]
    fn k3_and_scalar_dimensions() {
        let dec = DirectIntegralDecomposition::build(&graph(3, &[(0, 1), (1, 2), (0, 2)]), 1e-8).unwrap();
        let dims: Vec<usize> = dec.fibers().iter().map(Fiber::dim).collect();
        assert_eq!(dims, [1, 2]);
        assert!((dec.fibers()[1].lambda() - 3.0).abs() < 1e-14);

        let sp = Arc::new(DiscreteMeasureSpace::uniform(3));
        let k = Kernel::diagonal(sp, &[2.5, 2.5, 2.5]).unwrap();
        let dec = DirectIntegralDecomposition::build(&k, 1e-8).unwrap();
        assert_eq!(dec.fibers().len(), 1);
        assert_eq!(dec.fibers()[0].dim(), 3);
        assert!((dec.fibers()[0].lambda() - 2.5f64).abs() < 1e-15);
    }

    #[test]
    fn transform_of_basis_element_and_zero() {
        let dec = DirectIntegralDecomposition::build(&graph(3, &[(0, 1), (1, 2)]), 1e-8).unwrap();
        let phi = dec.fibers()[1].basis()[0].clone();
        let c = dec.transform(&phi).unwrap();
        for (i, block) in c.blocks().iter().enumerate() {
            let want = if i == 1 { 1.0 } else { 0.0 };
            assert!((block[0] - C::new(want, 0.0)).norm() < 1e-14);
        }
        let zero = VertexFunction::zeros(dec.space().clone());
        assert!(dec.transform(&zero).unwrap().blocks().iter().flatten().all(|c| c.norm() == 0.0));
        assert!(corollary22_check(&dec, &zero).unwrap() == 0.0);
        let g = corollary22_check(&dec, &phi).unwrap();
        assert!(g < 1e-14);
    }

    #[test]
    fn unit_coefficient_inverts_to_scaled_basis_element() {
        let k = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let options = DecompositionOptions { masses: MassConvention::Multiplicity, ..Default::default() };
        let dec = DirectIntegralDecomposition::build_with(&k, &options).unwrap();
        let mut c = FiberCoefficients::new(dec.fibers().iter().map(|f| vec![czero(); f.dim()]).collect());
        c.blocks[1][1] = C::new(1.0, 0.0);
        let v = dec.inverse_transform(&c).unwrap();
        let want = dec.fibers()[1].basis()[1].scale(C::new(2.0, 0.0));
        assert!(v.sub(&want).unwrap().sup_norm() < 1e-15);
        assert!(dec.basis_gram_deviation() < 1e-14);

        let f = real(dec.space(), &[0.3, -1.0, 2.0]);
        let back = dec.inverse_transform(&dec.transform(&f).unwrap()).unwrap();
        assert!(back.sub(&f).unwrap().norm() < 1e-14);
    }

    #[test]
    fn kernel_examples_on_k2() {
        let dec = DirectIntegralDecomposition::build(&graph(2, &[(0, 1)]), 1e-8).unwrap();
        let w = spectral_kernel(&dec);
        for y in 0..2 {
            for x in 0..2 {
                assert!((w.value(0, y, x) - C::new(0.5, 0.0)).norm() < 1e-15);
                assert!((w.value(1, x, y) - w.value(1, y, x).conj()).norm() < 1e-15);
            }
        }
        let d = real(dec.space(), &[1.0, 0.0]);
        let rhs = w.pairing(&d, Multiplier::One, &d).unwrap();
        assert!((rhs - C::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn kernel_sections_are_eigenfunctions_with_weights() {
        let sp = Arc::new(DiscreteMeasureSpace::indexed(vec![4.0, 1.0, 0.5]).unwrap());
        let g = GraphSpec::new(sp.clone(), vec![(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let k = laplacian_from_graph(&g).unwrap();
        let dec = DirectIntegralDecomposition::build(&k, 1e-8).unwrap();
        let w = spectral_kernel(&dec);
        for atom in 0..dec.fibers().len() {
            for y in 0..3 {
                let s = w.section(&sp, atom, y).unwrap();
                assert!(eigen_residual(&k, &s, w.lambdas()[atom]).unwrap() < 1e-13);
            }
        }
        let f = real(&sp, &[1.0, -2.0, 0.5]);
        let gf = real(&sp, &[0.0, 1.0, 3.0]);
        for phi in Multiplier::standard_set() {
            let lhs = raw_inner(gf.values(), dec.functional_calculus(phi, &f).unwrap().values(), sp.measure());
            assert!((lhs - w.pairing(&gf, phi, &f).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn pairing_identity_on_p3() {
        let k = graph(3, &[(0, 1), (1, 2)]);
        let dec = DirectIntegralDecomposition::build(&k, 1e-8).unwrap();
        let u = VertexFunction::delta(dec.space().clone(), 0).unwrap();
        let g = CompactFunction::delta(dec.space().clone(), 0).unwrap();
        let r = pairing_identity_check(&dec, &u, &g, Multiplier::Square).unwrap();
        // L²δ_0 at 0: (L δ_0) = (1, -1, 0); L of that = (2, -3, 1).
        assert!((r.lhs - C::new(2.0, 0.0)).norm() < 1e-14 && r.abs_gap < 1e-14);
        let r = pairing_identity_check(&dec, &u, &g, Multiplier::Resolvent).unwrap();
        assert!(r.abs_gap < 1e-14);
    }

    #[test]
    fn uniqueness_against_itself_and_rotations() {
        let k = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let dec = DirectIntegralDecomposition::build(&k, 1e-8).unwrap();
        let basis: Vec<_> = (0..3).map(|x| CompactFunction::delta(dec.space().clone(), x).unwrap()).collect();
        let r = uniqueness_compare(&dec, &dec, &basis).unwrap();
        assert!(r.max_gap() < 1e-15);

        let (c, s) = (0.6, 0.8);
        let u = Matrix::from_rows(2, 2, vec![C::new(c, 0.0), C::new(0.0, -s), C::new(0.0, -s), C::new(c, 0.0)]).unwrap();
        let rotated = dec.with_rotated_bases(&[Matrix::identity(1), u]).unwrap();
        let r = uniqueness_compare(&dec, &rotated, &basis).unwrap();
        assert!(r.max_gap() < 1e-14, "{r:?}");
        assert!(rotated.basis_gram_deviation() < 1e-14);

        let other = DirectIntegralDecomposition::build(&graph(3, &[(0, 1), (1, 2)]), 1e-8).unwrap();
        assert!(matches!(uniqueness_compare(&dec, &other, &basis), Err(Error::KernelMismatch)));
    }

    #[test]
    fn completeness_ranks_are_full() {
        let dec = DirectIntegralDecomposition::build(&graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]), 1e-8).unwrap();
        for (rank, dim) in dec.completeness_ranks() {
            assert_eq!(rank, dim);
        }
    }
}
