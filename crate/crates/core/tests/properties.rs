//! Invariants checked on randomized inputs.

mod support;

use std::sync::Arc;

use eigexpand::sierpinski::{ball_profile, edge_count, vertex_count};
use eigexpand::{
    assemble_matrix, build_gasket, c_omega_inclusion_check, cc_eigen_residual, decimation_analysis, dual_pairing,
    eigen_residual, eigendecompose_with, fourier_coefficient, gasket_laplacian, group_eigenvalues, hs_gamma_check,
    inner_product, weighted_norm_sq, Compact, Complex, DecimationOptions, Decomposition, DecompositionOptions,
    EigenMethod, Function, Gasket, Multiplier, SmoothingPair, Space, Weights,
};
use proptest::prelude::*;
use support::*;

fn case_for(seed: u64, n: usize, hermitian: bool) -> Case {
    let mut rng = rng(seed, "properties.case");
    if hermitian {
        random_hermitian(&mut rng, n)
    } else {
        random_graph(&mut rng, n)
    }
}

fn values_for(seed: u64, name: &str, n: usize) -> Vec<Complex> {
    random_values(&mut rng(seed, name), n)
}

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex>> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| Complex::new(a, b)), n)
}

fn space_and_two(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<Complex>, Vec<Complex>)> {
    (1..=max).prop_flat_map(|n| (prop::collection::vec(0.1f64..10.0, n), complex_vec(n), complex_vec(n)))
}

const METHODS: [EigenMethod; 2] = [EigenMethod::TridiagonalQl, EigenMethod::CyclicJacobi];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inner_product_is_hermitian_and_positive((m, v, u) in space_and_two(12)) {
        let space = Arc::new(Space::indexed(m).unwrap());
        let (v, u) = (function(&space, v), function(&space, u));
        let vu = inner_product(&v, &u, &space).unwrap();
        let uv = inner_product(&u, &v, &space).unwrap();
        prop_assert!((vu - uv.conj()).norm() <= 1e-13 * (1.0 + vu.norm()));

        let uu = inner_product(&u, &u, &space).unwrap();
        prop_assert!(uu.re >= 0.0 && uu.im.abs() <= 1e-13 * uu.re);
        prop_assert_eq!(uu.re == 0.0, u.values().iter().all(|x| *x == zero()));
        let z = Function::zeros(space.clone());
        prop_assert_eq!(inner_product(&z, &z, &space).unwrap(), zero());
    }

    #[test]
    fn dual_pairing_and_unit_weights_reduce_to_the_inner_product((m, g, u) in space_and_two(12)) {
        let space = Arc::new(Space::indexed(m).unwrap());
        let (g, u) = (function(&space, g), function(&space, u));
        let full = Compact::from_function(u.clone());
        let ip = inner_product(&g, &u, &space).unwrap();
        prop_assert!((dual_pairing(&g, &full).unwrap() - ip).norm() <= 1e-13 * (1.0 + ip.norm()));

        let ones = vec![1.0; space.len()];
        let w = weighted_norm_sq(&u, &ones, &space).unwrap();
        let uu = inner_product(&u, &u, &space).unwrap().re;
        prop_assert!((w - uu).abs() <= 1e-13 * (1.0 + uu));
    }

    #[test]
    fn fourier_coefficient_is_bitwise_the_dual_pairing((m, phi, f) in space_and_two(16)) {
        let space = Arc::new(Space::indexed(m).unwrap());
        let (phi, f) = (function(&space, phi), function(&space, f));
        let a = fourier_coefficient(&phi, &f, &space).unwrap();
        let b = dual_pairing(&phi, &Compact::from_function(f)).unwrap();
        prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
        prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    #[test]
    fn assembled_matrix_is_hermitian(seed in any::<u64>(), n in 1usize..25, hermitian in any::<bool>()) {
        let case = case_for(seed, n.max(2), hermitian);
        let h = assemble_matrix(&case.kernel).unwrap();
        let b = h.matrix();
        let scale = b.max_abs().max(1.0);
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                prop_assert!((b[(i, j)] - b[(j, i)].conj()).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn kernel_operator_is_symmetric(seed in any::<u64>(), n in 2usize..30, hermitian in any::<bool>()) {
        let case = case_for(seed, n, hermitian);
        let w = function(&case.space, values_for(seed, "properties.w", n));
        let v = function(&case.space, values_for(seed, "properties.v", n));
        let aw = function(&case.space, dense_apply(&case.kernel, w.values()));
        let av = function(&case.space, dense_apply(&case.kernel, v.values()));
        let lhs = inner_product(&aw, &v, &case.space).unwrap();
        let rhs = inner_product(&w, &av, &case.space).unwrap();
        let scale = case.kernel.row_norm_bound() * w.norm() * v.norm();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + scale));
    }

    #[test]
    fn graph_laplacians_are_positive_semidefinite(seed in any::<u64>(), n in 2usize..40) {
        let case = case_for(seed, n, false);
        let eig = eigendecompose_with(&assemble_matrix(&case.kernel).unwrap(), EigenMethod::TridiagonalQl).unwrap();
        let scale = eig.values().iter().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!(eig.values()[0] >= -1e-10 * scale);
    }

    #[test]
    fn eigendecomposition_reconstructs_and_preserves_trace(seed in any::<u64>(), n in 1usize..40, hermitian in any::<bool>()) {
        let case = case_for(seed, n.max(2), hermitian);
        let h = assemble_matrix(&case.kernel).unwrap();
        let norm = h.matrix().frobenius_norm();
        for method in METHODS {
            let eig = eigendecompose_with(&h, method).unwrap();
            prop_assert!(eig.reconstruct().sub(h.matrix()).unwrap().frobenius_norm() <= 1e-9 * norm);
            let sum: f64 = eig.values().iter().sum();
            let abs_sum: f64 = eig.values().iter().map(|v| v.abs()).sum();
            prop_assert!((sum - h.trace()).abs() <= 1e-10 * abs_sum.max(1.0));
        }
    }

    #[test]
    fn relabeling_leaves_the_spectrum_unchanged(seed in any::<u64>(), n in 2usize..30) {
        let case = case_for(seed, n, seed % 2 == 0);
        let h = assemble_matrix(&case.kernel).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(seed as usize % n);
        perm.swap(0, n - 1);
        let a = eigendecompose_with(&h, EigenMethod::TridiagonalQl).unwrap();
        let b = eigendecompose_with(&h.permuted(&perm).unwrap(), EigenMethod::TridiagonalQl).unwrap();
        let scale = a.values().iter().fold(1.0f64, |s, v| s.max(v.abs()));
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn grouping_is_idempotent(mut values in prop::collection::vec(-5.0f64..5.0, 1..30), dupes in 0usize..10, tol in 1e-10f64..1e-3) {
        let extra: Vec<f64> = values.iter().take(dupes).map(|v| v + 0.1 * tol).collect();
        values.extend(extra);
        values.sort_by(f64::total_cmp);
        let grouped = group_eigenvalues(&values, tol).unwrap();
        let reps = grouped.representatives();
        let again = group_eigenvalues(&reps, tol).unwrap();
        prop_assert_eq!(again.groups.len(), reps.len());
        prop_assert_eq!(again.representatives(), reps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn residual_definitions_are_equivalent(seed in any::<u64>(), n in 2usize..20, on_spectrum in any::<bool>()) {
        let case = case_for(seed, n, seed % 3 == 0);
        let (phi, lambda) = if on_spectrum {
            let dec = Decomposition::build(&case.kernel, 1e-8).unwrap();
            let fiber = &dec.fibers()[seed as usize % dec.fibers().len()];
            (fiber.basis()[0].clone(), fiber.lambda())
        } else {
            (function(&case.space, values_for(seed, "properties.phi", n)), (seed % 17) as f64 - 8.0)
        };
        let er = eigen_residual(&case.kernel, &phi, lambda).unwrap();
        let cc = cc_eigen_residual(&case.kernel, &phi, lambda).unwrap();
        let scale = (1.0 + lambda.abs()) * phi.sup_norm();
        prop_assert!((er - cc).abs() <= 1e-12 * scale);
        if on_spectrum {
            prop_assert!(er <= 1e-9 * scale && cc <= 1e-9 * scale);
        } else {
            prop_assert_eq!(er <= 1e-9 * scale, cc <= 1e-9 * scale);
        }
    }

    #[test]
    fn fibers_are_complete_and_made_of_eigenfunctions(seed in any::<u64>(), n in 2usize..30, family in 0usize..4) {
        let case = if family == 3 { case_for(seed, n, true) } else { degenerate(&mut rng(seed, "properties.degenerate"), family, n) };
        let dec = Decomposition::build(&case.kernel, 1e-8).unwrap();
        for (rank, dim) in dec.completeness_ranks() {
            prop_assert_eq!(rank, dim);
        }
        prop_assert_eq!(dec.total_dim(), case.space.len());
        for r in dec.fiber_residuals().unwrap() {
            prop_assert!(r.eigen <= 1e-9 * r.scale && r.cc <= 1e-9 * r.scale);
        }
    }

    #[test]
    fn transform_intertwines_every_multiplier(seed in any::<u64>(), n in 2usize..30, hermitian in any::<bool>()) {
        let case = case_for(seed, n, hermitian);
        let dec = Decomposition::build(&case.kernel, 1e-8).unwrap();
        let f = function(&case.space, values_for(seed, "properties.f", n));
        let lambdas = dec.measure().support();
        for phi in Multiplier::standard_set() {
            let sup = phi.sup_abs(&lambdas).max(1.0);
            let gap = eigexpand::intertwining_gap(&dec, &f, phi).unwrap();
            prop_assert!(gap <= 1e-10 * sup * f.norm(), "{phi}: {gap}");
        }
    }

    #[test]
    fn atom_projector_is_a_narrow_indicator(seed in any::<u64>(), n in 2usize..25) {
        let case = degenerate(&mut rng(seed, "properties.projector"), seed as usize, n);
        let dec = Decomposition::build(&case.kernel, 1e-8).unwrap();
        let f = function(&case.space, values_for(seed, "properties.f", case.space.len()));
        for (atom, fiber) in dec.fibers().iter().enumerate() {
            let w = 1e-7 * (1.0 + fiber.lambda().abs());
            let narrow = dec.functional_calculus(Multiplier::Indicator(fiber.lambda() - w, fiber.lambda() + w), &f).unwrap();
            let p = dec.project(atom, &f).unwrap();
            prop_assert!(p.sub(&narrow).unwrap().norm() <= 1e-9 * f.norm());
        }
    }

    #[test]
    fn smoothing_pair_duality(seed in any::<u64>(), n in 1usize..30) {
        let mut r = rng(seed, "properties.smoothing");
        let space = Arc::new(Space::indexed((0..n).map(|_| rand::Rng::random_range(&mut r, 0.1..10.0)).collect()).unwrap());
        let omega: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut r, 1e-3..1.0)).collect();
        let pair = SmoothingPair::new(space.clone(), Weights::relaxed(omega).unwrap()).unwrap();
        let u = function(&space, random_values(&mut r, n));
        let v = function(&space, random_values(&mut r, n));
        let ts = pair.apply_t(&pair.apply_s(&u).unwrap()).unwrap();
        for (a, b) in ts.values().iter().zip(u.values()) {
            prop_assert!((a - b).norm() <= 4.0 * f64::EPSILON * b.norm());
        }
        prop_assert!(pair.ts_identity_gap() <= 2.0 * f64::EPSILON);
        let (pairing, bound) = pair.duality_bound(&v, &u).unwrap();
        prop_assert!(pairing <= bound * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn multipliers_bound_hilbert_schmidt_norms(seed in any::<u64>(), n in 2usize..30, hermitian in any::<bool>()) {
        let case = case_for(seed, n, hermitian);
        let mut r = rng(seed, "properties.omega");
        let omega: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut r, 0.01..1.0)).collect();
        let pair = SmoothingPair::new(case.space.clone(), Weights::relaxed(omega).unwrap()).unwrap();
        for gamma in [Multiplier::Resolvent, Multiplier::ExpNeg(0.1), Multiplier::ExpNeg(1.0)] {
            let check = hs_gamma_check(&case.kernel, &pair, gamma, None).unwrap();
            prop_assert!(check.hs <= check.bound * (1.0 + 1e-10), "{gamma}: {} > {}", check.hs, check.bound);
        }
    }

    #[test]
    fn aggregate_inequality_holds(seed in any::<u64>(), n in 2usize..30, family in 0usize..4) {
        let case = if family == 3 { case_for(seed, n, false) } else { degenerate(&mut rng(seed, "properties.degenerate"), family, n) };
        let dec = Decomposition::build(&case.kernel, 1e-8).unwrap();
        let omega = Weights::geometric(case.space.len(), 0.5).unwrap();
        let check = c_omega_inclusion_check(&dec, &omega).unwrap();
        prop_assert!(check.holds(1e-12 * check.sum_sq));
        // With unit masses and a complete basis the inequality is an equality.
        prop_assert!(check.slack().abs() <= 1e-10 * check.sum_sq);
    }

    #[test]
    fn solvers_agree_on_spectra(seed in any::<u64>(), n in 2usize..30) {
        let case = case_for(seed, n, seed % 2 == 1);
        let options = DecompositionOptions { method: EigenMethod::CyclicJacobi, ..DecompositionOptions::default() };
        let a = Decomposition::build(&case.kernel, 1e-8).unwrap();
        let b = Decomposition::build_with(&case.kernel, &options).unwrap();
        prop_assert_eq!(a.fibers().len(), b.fibers().len());
        for (x, y) in a.fibers().iter().zip(b.fibers()) {
            prop_assert_eq!(x.dim(), y.dim());
            prop_assert!((x.lambda() - y.lambda()).abs() <= 1e-9 * (1.0 + x.lambda().abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn transform_is_unitary(seed in any::<u64>(), n in 2usize..16) {
        let case = case_for(seed, n, seed % 4 == 0);
        let dec = Decomposition::build(&case.kernel, 1e-8).unwrap();
        let f = function(&case.space, values_for(seed, "properties.unitary", n));
        let c = dec.transform(&f).unwrap();
        let norm_sq = f.norm_sq();
        prop_assert!((dec.coefficient_norm_sq(&c).unwrap() - norm_sq).abs() <= 1e-10 * norm_sq);
        let back = dec.inverse_transform(&c).unwrap();
        prop_assert!(back.sub(&f).unwrap().norm() <= 1e-10 * norm_sq.sqrt());
    }
}

#[test]
fn gasket_counts_match_closed_forms_up_to_the_cap() {
    for level in 0..=6 {
        let g: Gasket = build_gasket(level).unwrap();
        let three = 3usize.pow(level as u32);
        assert_eq!(g.len(), 3 * (three + 1) / 2);
        assert_eq!(g.edges().len(), 3 * three);
        assert_eq!((g.len(), g.edges().len()), (vertex_count(level), edge_count(level)));
    }
}

#[test]
fn gasket_spectra_are_in_range_with_a_simple_zero_mode() {
    for level in 0..=4 {
        let g: Gasket = build_gasket(level).unwrap();
        let dec = Decomposition::build(&gasket_laplacian(&g), 1e-8).unwrap();
        let first = &dec.fibers()[0];
        assert!(first.lambda().abs() <= 1e-10 && first.dim() == 1, "level {level}");
        let phi = first.basis()[0].values();
        assert!(phi.iter().all(|v| (v - phi[0]).norm() <= 1e-12));
        for f in dec.fibers() {
            assert!(f.lambda() >= -1e-10 && f.lambda() <= 8.0 + 1e-10);
        }
    }
}

#[test]
fn zero_mode_restricts_exactly_and_fits_are_never_silently_confirmed() {
    let analysis = decimation_analysis::<f64>(4, &DecimationOptions::default()).unwrap();
    for records in &analysis.records {
        let zero_mode = records.iter().find(|r| r.lambda.abs() <= 1e-10).unwrap();
        assert!(zero_mode.persistent && zero_mode.residual.unwrap() <= 1e-12);
        for r in records.iter().filter(|r| r.persistent) {
            assert!(r.residual.unwrap() <= 1e-8);
        }
    }
    for fit in analysis.transition_fits.iter().chain([&analysis.overall_fit]).flatten() {
        if fit.max_residual > 1e-6 || fit.hypothesis_gap > 1e-6 {
            assert!(!fit.confirmed);
        }
    }
}

#[test]
fn ball_profiles_settle_at_the_total_mass() {
    for level in 0..=4 {
        let g: Gasket = build_gasket(level).unwrap();
        for alpha in [0.25, 1.0] {
            let profile = ball_profile(&g, 0, alpha, 4).unwrap();
            let total = g.space().total_mass();
            let diam = profile.len() as u32 - 5;
            for w in profile.windows(2) {
                assert!(w[1].1 >= w[0].1 && w[1].1 <= total);
            }
            for w in profile.windows(2).filter(|w| w[0].0 >= diam) {
                assert!(w[1].2 <= w[0].2);
            }
            let at_diam = profile[diam as usize];
            assert_eq!(at_diam.1, total);
            assert!((at_diam.2 - (-alpha * f64::from(diam)).exp() * total).abs() <= 1e-12 * total);
        }
    }
}
