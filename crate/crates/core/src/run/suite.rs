//! Scaled per-case errors for every identity, and their aggregation into
//! report checks.
//!
//! Each error is dimensionless: identities quadratic in `f` are divided by
//! `max(sup|Φ|², 1) ‖f‖²`, linear ones by `max(sup|Φ|, 1) ‖f‖`, with `sup`
//! over the spectrum. Both sides of every identity are bounded by that scale.

use crate::calculus::Multiplier;
use crate::error::Result;
use crate::fibers::{
    adjoint_pairing_check, corollary22_check, intertwining_gap, pairing_identity_check, plancherel_check,
    spectral_kernel, DirectIntegralDecomposition,
};
use crate::growth::{c_omega_inclusion_check, hs_gamma_check, SmoothingPair, WeightSequence};
use crate::space::{dual_pairing, CompactFunction, VertexFunction};

use super::config::RunConfig;
use super::report::CheckResult;

type Dec = DirectIntegralDecomposition<f64>;
type Function = VertexFunction<f64>;

/// Largest spectral value of the decomposition in absolute value.
pub fn spectral_radius(dec: &Dec) -> f64 {
    dec.measure().support().iter().fold(0.0, |a, l| a.max(l.abs()))
}

fn phi_scale(dec: &Dec, phi: Multiplier) -> f64 {
    phi.sup_abs(&dec.measure().support()).max(1.0)
}

fn guard(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        1.0
    }
}

pub fn plancherel_error(dec: &Dec, f: &Function, phi: Multiplier) -> Result<f64> {
    let c = plancherel_check(dec, f, phi)?;
    let s = phi_scale(dec, phi);
    Ok(c.abs_gap / guard(s * s * f.norm_sq()))
}

pub fn intertwining_error(dec: &Dec, f: &Function, phi: Multiplier) -> Result<f64> {
    Ok(intertwining_gap(dec, f, phi)? / guard(phi_scale(dec, phi) * f.norm()))
}

pub fn reconstruction_error(dec: &Dec, f: &Function) -> Result<f64> {
    let back = dec.inverse_transform(&dec.transform(f)?)?;
    Ok(back.sub(f)?.norm() / guard(f.norm()))
}

pub fn pairing_error(dec: &Dec, u: &Function, g: &CompactFunction<f64>, phi: Multiplier) -> Result<f64> {
    let c = pairing_identity_check(dec, u, g, phi)?;
    Ok(c.abs_gap / guard(phi_scale(dec, phi) * u.norm() * g.function().norm()))
}

pub fn adjoint_pairing_error(dec: &Dec, g: &Function, f: &CompactFunction<f64>, phi: Multiplier) -> Result<f64> {
    let c = adjoint_pairing_check(dec, g, f, phi)?;
    Ok(c.abs_gap / guard(phi_scale(dec, phi) * g.norm() * f.function().norm()))
}

pub fn eigen_coefficient_error(dec: &Dec, f: &Function) -> Result<f64> {
    Ok(corollary22_check(dec, f)? / guard((1.0 + spectral_radius(dec)) * f.norm()))
}

/// Worst scaled residuals `(eigen, cc, |eigen − cc|)` over every fiber basis element.
pub fn residual_errors(dec: &Dec) -> Result<(f64, f64, f64, usize)> {
    let residuals = dec.fiber_residuals()?;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for r in &residuals {
        let s = guard(r.scale);
        worst.0 = worst.0.max(r.eigen / s);
        worst.1 = worst.1.max(r.cc / s);
        worst.2 = worst.2.max((r.eigen - r.cc).abs() / s);
    }
    Ok((worst.0, worst.1, worst.2, residuals.len()))
}

/// Largest space on which the dense spectral kernel is materialized.
pub const SPECTRAL_KERNEL_MAX_DIM: usize = 64;

/// Every fiber-level check on the given test functions.
pub fn decomposition_checks(dec: &Dec, functions: &[Function], config: &RunConfig) -> Result<Vec<CheckResult>> {
    let tol = config.tol_verify;
    let n = dec.space().len();
    let probes: Vec<CompactFunction<f64>> = (0..n.min(4))
        .map(|x| CompactFunction::delta(dec.space().clone(), x))
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();

    for &phi in &config.multipliers {
        let mut pl = 0.0f64;
        let mut it = 0.0f64;
        let mut pa = 0.0f64;
        let mut ad = 0.0f64;
        for f in functions {
            pl = pl.max(plancherel_error(dec, f, phi)?);
            it = it.max(intertwining_error(dec, f, phi)?);
            for g in &probes {
                pa = pa.max(pairing_error(dec, f, g, phi)?);
                ad = ad.max(adjoint_pairing_error(dec, f, g, phi)?);
            }
        }
        let k = functions.len();
        checks.push(CheckResult::new(format!("plancherel[{phi}]"), pl, tol, k));
        checks.push(CheckResult::new(format!("intertwining[{phi}]"), it, tol, k));
        checks.push(CheckResult::new(format!("pairing_identity[{phi}]"), pa, tol, k * probes.len()));
        checks.push(CheckResult::new(format!("adjoint_pairing[{phi}]"), ad, tol, k * probes.len()));
    }

    if n <= SPECTRAL_KERNEL_MAX_DIM {
        let w = spectral_kernel(dec);
        let mut worst = 0.0f64;
        let mut cases = 0;
        for &phi in &config.multipliers {
            for g in functions {
                for f in &probes {
                    let applied = dec.functional_calculus(phi, f.function())?;
                    // ⟨g, Φ(L)f⟩ over the support of g.
                    let lhs = dual_pairing(&applied, &CompactFunction::from_function(g.clone()))?.conj();
                    let rhs = w.pairing(g, phi, f.function())?;
                    worst = worst.max((lhs - rhs).norm() / guard(phi_scale(dec, phi) * g.norm() * f.function().norm()));
                    cases += 1;
                }
            }
        }
        checks.push(CheckResult::new("spectral_kernel", worst, tol, cases));
    }

    let (eigen, cc, agree, count) = residual_errors(dec)?;
    checks.push(CheckResult::new("eigen_residual", eigen, tol, count));
    checks.push(CheckResult::new("cc_eigen_residual", cc, tol, count));
    checks.push(CheckResult::new("residual_agreement", agree, config.tol_agree, count));

    let mut coeff = 0.0f64;
    let mut recon = 0.0f64;
    for f in functions {
        coeff = coeff.max(eigen_coefficient_error(dec, f)?);
        recon = recon.max(reconstruction_error(dec, f)?);
    }
    checks.push(CheckResult::new("eigen_coefficients", coeff, tol, functions.len()));
    checks.push(CheckResult::new("reconstruction", recon, config.tol_reconstruct, functions.len()));
    checks.push(CheckResult::new("fiber_orthonormality", dec.basis_gram_deviation(), tol, dec.total_dim()));

    let ranks = dec.completeness_ranks();
    let deficit: usize = ranks.iter().map(|&(r, d)| d.abs_diff(r)).sum::<usize>() + dec.total_dim().abs_diff(n);
    checks.push(CheckResult::new("completeness", deficit as f64, 0.0, ranks.len()));
    Ok(checks)
}

/// Growth checks: the aggregate `C_ω` inequality and the resolvent
/// Hilbert–Schmidt bound.
pub fn growth_checks(dec: &Dec, omega: &WeightSequence<f64>, config: &RunConfig) -> Result<Vec<CheckResult>> {
    let tol = config.tol_verify;
    let c = c_omega_inclusion_check(dec, omega)?;
    let excess = (c.aggregate - c.sum_sq).max(0.0) / guard(c.sum_sq);
    let pair = SmoothingPair::new(dec.space().clone(), omega.clone())?;
    let hs = hs_gamma_check(dec.kernel(), &pair, Multiplier::Resolvent, None)?;
    let hs_excess = (hs.hs - hs.bound).max(0.0) / guard(hs.bound);
    Ok(vec![
        CheckResult::new("c_omega_aggregate", excess, tol, dec.total_dim())
            .with_value("aggregate", c.aggregate)
            .with_value("sum_sq", c.sum_sq)
            .with_value("slack", c.slack())
            .with_value("max_weighted_norm", c.max_weighted_norm),
        CheckResult::new("resolvent_hs_bound", hs_excess, tol, 1)
            .with_value("hs", hs.hs)
            .with_value("bound", hs.bound),
    ])
}
