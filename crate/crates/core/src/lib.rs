//! Generalized eigenfunction expansions for locally finite selfadjoint
//! operators on finite discrete measure spaces.
//!
//! A Hermitian kernel `a(x, y)` on a space `(V, m)` defines the operator
//! `(Ãw)(x) = Σ_y a(x, y) w(y) m(y)`. The crate decomposes `ℓ²(V, m)` into
//! fibers of generalized eigenfunctions, transforms functions into fiber
//! coefficients and back, evaluates spectral multipliers, and checks the
//! resulting identities numerically. The [`sierpinski`] module applies the
//! same machinery to the level-`n` Sierpinski gasket graphs and measures
//! spectral decimation by restriction.
//!
//! Everything is generic over the real scalar ([`Real`], implemented for
//! `f32` and `f64`); the aliases at the crate root fix it to `f64`.
//!
//! ```
//! use std::sync::Arc;
//! use eigexpand::{laplacian_from_graph, Decomposition, Function, GraphSpec, Multiplier, Space};
//!
//! let space = Arc::new(Space::uniform(2));
//! let graph = GraphSpec::new(space.clone(), vec![(0, 1, 1.0)]).unwrap();
//! let kernel = laplacian_from_graph(&graph).unwrap();
//! let dec = Decomposition::build(&kernel, 1e-8).unwrap();
//! let lambdas = dec.measure().support();
//! assert!(lambdas[0].abs() < 1e-15 && (lambdas[1] - 2.0).abs() < 1e-15);
//!
//! let f = Function::from_real(space, &[1.0, 0.0]).unwrap();
//! let heat = dec.functional_calculus(Multiplier::ExpNeg(1.0), &f).unwrap();
//! assert!((heat.norm_sq() - (1.0 + (-4.0f64).exp()) / 2.0).abs() < 1e-14);
//! ```

// Negated comparisons are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod eigensolve;
pub mod error;
pub mod fibers;
pub mod growth;
pub mod linalg;
pub mod operator;
pub mod rng;
pub mod run;
pub mod scalar;
pub mod sierpinski;
pub mod space;

pub use calculus::{apply_direct, parse_multipliers, Multiplier};
pub use eigensolve::{
    eigendecompose, eigendecompose_with, group_eigenvalues, EigenDecomposition, EigenMethod, GroupedSpectrum,
    HermitianMatrix, SpectralGroup,
};
pub use error::{Error, Result};
pub use fibers::{
    adjoint_pairing_check, corollary22_check, intertwining_gap, pairing_identity_check, plancherel_check,
    spectral_kernel, uniqueness_compare, DecompositionOptions, DirectIntegralDecomposition, Fiber,
    FiberCoefficients, MassConvention, SpectralKernel, SpectralMeasure, UniquenessReport,
};
pub use growth::{
    ball_volume, c_omega_inclusion_check, fourier_coefficient, hs_gamma_check, hs_norm_sq, subexponential_check,
    HopMetric, Metric, SmoothingPair, WeightSequence,
};
pub use linalg::Matrix;
pub use operator::{
    apply_formal, apply_formal_all, assemble_matrix, cc_eigen_residual, eigen_residual, laplacian_from_graph,
    GraphSpec, Kernel,
};
pub use scalar::{Real, C};
pub use sierpinski::{
    build_gasket, decimation_analysis, gasket_laplacian, hop_metric, theorem5_check, truncation_stability,
    DecimationAnalysis, DecimationOptions, GasketGraph,
};
pub use space::{dual_pairing, inner_product, weighted_norm_sq, CompactFunction, DiscreteMeasureSpace, VertexFunction};

/// `f64` instantiations.
pub type Complex = C<f64>;
pub type Space = DiscreteMeasureSpace<f64>;
pub type Function = VertexFunction<f64>;
pub type Compact = CompactFunction<f64>;
pub type KernelF64 = Kernel<f64>;
pub type Graph = GraphSpec<f64>;
pub type Hermitian = HermitianMatrix<f64>;
pub type Eigen = EigenDecomposition<f64>;
pub type Decomposition = DirectIntegralDecomposition<f64>;
pub type Coefficients = FiberCoefficients<f64>;
pub type Weights = WeightSequence<f64>;
pub type Gasket = GasketGraph<f64>;
