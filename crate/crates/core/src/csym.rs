//! Complex-symmetry checks for composition operators with Schröder symbols.
//!
//! `C_φ` is complex symmetric iff its Koenigs sequence `(σ^n)` is complete and
//! conjugate-orthogonal. At finite order this module measures each ingredient:
//! Gram matrices `⟨Jσ^n, σ^m⟩`, completeness residuals, the necessary condition
//! `|σ(0)| = |K_a'(a)| / (‖K_a‖ ‖K_a'‖)` for unit-norm `σ`, the expansion of
//! `K_a^{(n)}` in eigenvectors of `C_φ*`, and the commutant and power checks.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::kernels::{fixed_point, kernel_series, kernel_series_sums, DiskPoint, SymbolSpec};
use crate::koenigs::{koenigs_iterate, renormalize_unit_norm, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::linalg::{self, CMatrix, CVector};
use crate::operators::{
    block_eigenpairs, commute_defect, composition_matrix, csym_defect, ConjugationRep, OperatorMatrix,
};
use crate::series::{Complex, TaylorSeries};

/// Default gap above which [`eq13_test`] declares a symbol not complex symmetric.
/// The smallest gap in scope, `a - a/√(1+a²)` at `a = 0.1`, is about `5e-4`.
pub const DEFAULT_DECISION_TOL: f64 = 1e-4;
/// Default block for eigen-expansions.
pub const DEFAULT_EIGEN_BLOCK: usize = 16;
/// Minimum pairwise eigenvalue separation accepted by [`kernel_eigen_expansion`].
pub const MIN_EIGEN_SEPARATION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GramReport {
    /// `gram[(n, m)] = ⟨Jσ^n, σ^m⟩`
    pub gram: CMatrix,
    pub max_offdiag: f64,
    pub min_absdiag: f64,
}

pub fn gram_matrix(j: &ConjugationRep, sigmas: &[TaylorSeries]) -> Result<GramReport> {
    let images = sigmas.iter().map(|s| j.apply(s)).collect::<Result<Vec<_>>>()?;
    let n = sigmas.len();
    let mut gram = CMatrix::from_element(n, n, linalg::zero());
    for (r, jf) in images.iter().enumerate() {
        for (c, g) in sigmas.iter().enumerate() {
            gram[(r, c)] = jf.inner_product(g)?;
        }
    }
    let mut max_offdiag: f64 = 0.0;
    let mut min_absdiag = f64::INFINITY;
    for r in 0..n {
        for c in 0..n {
            let v = gram[(r, c)].norm();
            if r == c {
                min_absdiag = min_absdiag.min(v);
            } else {
                max_offdiag = max_offdiag.max(v);
            }
        }
    }
    Ok(GramReport { gram, max_offdiag, min_absdiag })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    NotComplexSymmetric,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::NotComplexSymmetric => "not_complex_symmetric",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CSymVerdict {
    /// `|σ(0)|` with `‖σ‖ = 1`
    pub lhs: f64,
    /// `|K_a'(a)| / (‖K_a‖ ‖K_a'‖)`
    pub rhs: f64,
    pub gap: f64,
    pub verdict: Verdict,
    /// Fixed point after rotating it onto `[0, 1)`.
    pub reduced_point: f64,
    /// Rotation angle `θ = arg a` used for the reduction.
    pub theta: f64,
    pub multiplier: Complex,
}

/// Tests the kernel necessary condition for complex symmetry.
///
/// A fixed point `a = |a| e^{iθ}` is first moved to `|a|` by conjugating the
/// symbol with the rotation (a unitary equivalence of the composition operators).
pub fn eq13_test(s: &SymbolSpec, order: usize, tol_decision: f64) -> Result<CSymVerdict> {
    let fp = fixed_point(s, order)?;
    if !fp.schroeder {
        return Err(LabError::domain(format!("{s} is not a Schröder map")));
    }
    let a = fp.point.value();
    let (r, theta) = if a.norm() == 0.0 { (0.0, 0.0) } else { a.to_polar() };
    let reduced = if theta == 0.0 { s.clone() } else { s.rotated(theta, order)? };

    let k = koenigs_iterate(&reduced, order, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let unit = renormalize_unit_norm(&k.sigma)?;
    let lhs = unit.coeff(0).norm();

    let sums = kernel_series_sums(DiskPoint::real(r)?, order)?;
    let rhs = sums.k1_at_a / (sums.norm_k * sums.norm_k1);
    let gap = (lhs - rhs).abs();
    let verdict = if gap > tol_decision { Verdict::NotComplexSymmetric } else { Verdict::Consistent };
    Ok(CSymVerdict { lhs, rhs, gap, verdict, reduced_point: r, theta, multiplier: fp.multiplier })
}

/// Distance from `z^k` to `span{σ^0, ..., σ^m}` in the truncated space.
pub fn completeness_residual(sigmas: &[TaylorSeries], k: usize, order: usize) -> Result<f64> {
    if k > order / 2 {
        return Err(LabError::usage(format!("completeness_residual: k = {k} exceeds N/2 = {}", order / 2)));
    }
    let vectors: Vec<CVector> = sigmas
        .iter()
        .map(|s| CVector::from_column_slice(s.with_order(order).coeffs()))
        .collect();
    let basis = linalg::orthonormal_basis(&vectors, 1e-14);
    let target = CVector::from_column_slice(TaylorSeries::monomial(k, order).coeffs());
    Ok(linalg::projection_residual(&target, &basis))
}

/// Residuals of `z^0..=z^k_max` against the same span.
pub fn completeness_curve(sigmas: &[TaylorSeries], k_max: usize, order: usize) -> Result<Vec<f64>> {
    (0..=k_max).map(|k| completeness_residual(sigmas, k, order)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelExpansion {
    /// Coefficients `a_0..a_n` of `K_a^{(n)} = Σ a_j v_j`.
    pub coeffs: Vec<Complex>,
    pub residual: f64,
    /// Block eigenvalues used, nearest to `conj(λ)^j`.
    pub eigenvalues: Vec<Complex>,
}

/// Expands `K_a^{(n)}` in the eigenvectors `v_0..v_n` of the block-truncated
/// adjoint `Mᴴ`, `Mᴴ v_j = conj(λ)^j v_j`.
pub fn kernel_eigen_expansion(s: &SymbolSpec, n: usize, order: usize, block: usize) -> Result<KernelExpansion> {
    if n >= block || block > order + 1 {
        return Err(LabError::usage(format!("kernel_eigen_expansion: need n < block <= N+1 (n={n}, block={block})")));
    }
    let fp = fixed_point(s, order)?;
    if !fp.schroeder {
        return Err(LabError::domain(format!("{s} is not a Schröder map")));
    }
    let m = composition_matrix(s, order)?;
    let adj = OperatorMatrix::from_entries(linalg::leading(m.entries(), block).adjoint())?;
    let lb = fp.multiplier.conj();
    let targets: Vec<Complex> = (0..=n).map(|j| lb.powu(j as u32)).collect();
    let pairs = block_eigenpairs(&adj, block, &targets, MIN_EIGEN_SEPARATION)?;

    let kernel = kernel_series(fp.point, n, order)?;
    let rhs = CVector::from_iterator(block, kernel.coeffs().iter().take(block).copied());
    let v = CMatrix::from_fn(block, n + 1, |i, j| pairs[j].1[i]);
    let svd = v.clone().svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| LabError::IllConditioned(format!("eigenvector least squares failed: {e}")))?;
    let residual = (&v * &sol - &rhs).norm();
    Ok(KernelExpansion {
        coeffs: sol.iter().copied().collect(),
        residual,
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
    })
}

/// Commutation defect `‖AM - MA‖` and `J`-symmetry defect of `A` on the block.
pub fn commutant_symmetry_check(
    a: &OperatorMatrix,
    m: &OperatorMatrix,
    j: &ConjugationRep,
    block: usize,
) -> Result<(f64, f64)> {
    Ok((commute_defect(a, m, block)?, csym_defect(a, j, block)?))
}

/// `J`-symmetry defect of `C_φ^n` on the block.
pub fn power_symmetry_check(s: &SymbolSpec, n: u32, j: &ConjugationRep, order: usize, block: usize) -> Result<f64> {
    if n == 0 {
        return Err(LabError::usage("power_symmetry_check: n must be at least 1"));
    }
    let m = composition_matrix(s, order)?;
    csym_defect(&m.pow(n), j, block)
}

/// `‖U M(Φ_{a,λ}) Uᴴ - M(Φ_{|a|,λ})‖` on the block, `U = diag(e^{ikθ})`, `θ = arg a`.
pub fn rotation_equivalence_check(a: DiskPoint, lambda: Complex, order: usize, block: usize) -> Result<f64> {
    let av = a.value();
    if av.norm() == 0.0 {
        return Err(LabError::domain("rotation_equivalence_check needs a ≠ 0"));
    }
    if block == 0 || block > order + 1 {
        return Err(LabError::usage("rotation_equivalence_check: block out of range"));
    }
    let (r, theta) = av.to_polar();
    let m = composition_matrix(&SymbolSpec::blaschke_pair(av, lambda)?, order)?;
    let m_abs = composition_matrix(&SymbolSpec::blaschke_pair(Complex::new(r, 0.0), lambda)?, order)?;
    let mut total = 0.0;
    for i in 0..block {
        for k in 0..block {
            let rotated = m.entries()[(i, k)] * Complex::from_polar(1.0, (i as f64 - k as f64) * theta);
            total += (rotated - m_abs.entries()[(i, k)]).norm_sqr();
        }
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::symbol_series;
    use crate::koenigs::koenigs_sequence;
    use crate::operators::{conjugation_basic, conjugation_ja};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    #[test]
    fn monomials_are_conjugate_orthogonal_under_basic_j() {
        let sigmas = koenigs_sequence(&TaylorSeries::monomial(1, 16), 6, 16);
        let g = gram_matrix(&conjugation_basic(16), &sigmas).unwrap();
        assert_eq!(g.gram, CMatrix::identity(7, 7));
        assert_eq!(g.max_offdiag, 0.0);
        assert_eq!(g.min_absdiag, 1.0);
    }

    #[test]
    fn shifted_monomials_under_ja() {
        let order = 128;
        let s = TaylorSeries::from_real(&[-0.5, 1.0], order).unwrap();
        let g = gram_matrix(&conjugation_ja(0.5, order).unwrap(), &koenigs_sequence(&s, 20, order)).unwrap();
        assert!(g.max_offdiag < 1e-10, "{}", g.max_offdiag);
        assert_abs_diff_eq!(g.gram[(0, 0)].re, 0.8660254, epsilon = 1e-7);
        assert_abs_diff_eq!(g.gram[(1, 1)].re, -0.6495190, epsilon = 1e-7);
    }

    #[test]
    fn automorphism_powers_fail_basic_j() {
        let order = 128;
        let phi = symbol_series(&SymbolSpec::automorphism(c(0.5)).unwrap(), order).unwrap();
        let g = gram_matrix(&conjugation_basic(order), &koenigs_sequence(&phi, 3, order)).unwrap();
        assert!(g.gram[(1, 2)].norm() > 0.01);
    }

    #[test]
    fn eq13_blaschke_and_affine() {
        let v = eq13_test(&SymbolSpec::blaschke_pair(c(0.5), c(0.3)).unwrap(), 256, DEFAULT_DECISION_TOL).unwrap();
        assert_abs_diff_eq!(v.lhs, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(v.rhs, 0.5 / 1.25f64.sqrt(), epsilon = 1e-9);
        assert_eq!(v.verdict, Verdict::NotComplexSymmetric);

        let v = eq13_test(&SymbolSpec::affine(c(0.5), c(0.25)).unwrap(), 256, DEFAULT_DECISION_TOL).unwrap();
        assert_abs_diff_eq!(v.lhs, 0.4472136, epsilon = 1e-7);
        assert!(v.gap < 1e-9);
        assert_eq!(v.verdict, Verdict::Consistent);
    }

    #[test]
    fn eq13_rotation_reduction() {
        let a = Complex::from_polar(0.5, PI / 3.0);
        let v = eq13_test(&SymbolSpec::blaschke_pair(a, c(0.3)).unwrap(), 256, DEFAULT_DECISION_TOL).unwrap();
        assert_eq!(v.verdict, Verdict::NotComplexSymmetric);
        assert_abs_diff_eq!(v.reduced_point, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v.lhs, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn eq13_rejects_non_schroeder() {
        let rot = SymbolSpec::Rotation { theta: 0.5 };
        assert!(matches!(eq13_test(&rot, 32, 1e-4), Err(LabError::Domain(_))));
    }

    #[test]
    fn completeness_cases() {
        let order = 64;
        let z = koenigs_sequence(&TaylorSeries::monomial(1, order), 5, order);
        assert_eq!(completeness_residual(&z, 3, order).unwrap(), 0.0);
        let s = koenigs_sequence(&TaylorSeries::from_real(&[-0.5, 1.0], order).unwrap(), 10, order);
        for k in 0..=10 {
            assert!(completeness_residual(&s, k, order).unwrap() < 1e-12);
        }
        assert!(completeness_residual(&s, 11, order).unwrap() > 0.1);
        assert!(completeness_residual(&s, 40, order).is_err());
    }

    #[test]
    fn kernel_expansion_affine() {
        let s = SymbolSpec::affine(c(0.5), c(0.25)).unwrap();
        let e0 = kernel_eigen_expansion(&s, 0, 128, 16).unwrap();
        assert!(e0.residual < 1e-8 && e0.coeffs[0].norm() > 0.0);
        // (f∘φ)^{(n)}(a) = c^n f^{(n)}(a) for affine φ: only the top term survives.
        for n in 1..=3 {
            let e = kernel_eigen_expansion(&s, n, 128, 16).unwrap();
            assert!(e.residual < 1e-7);
            let top = e.coeffs[n].norm();
            assert!(top > 1.0);
            assert!(e.coeffs[..n].iter().all(|x| x.norm() < 1e-10 * top));
        }
    }

    #[test]
    fn kernel_expansion_blaschke_has_lower_terms() {
        let s = SymbolSpec::blaschke_pair(c(0.5), c(0.3)).unwrap();
        // K_a' is an eigenvector of every C_φ* fixing a; K_a'' picks up K_a' via φ''(a).
        let e1 = kernel_eigen_expansion(&s, 1, 256, 16).unwrap();
        assert!(e1.coeffs[0].norm() < 1e-6 * e1.coeffs[1].norm());
        let e2 = kernel_eigen_expansion(&s, 2, 256, 16).unwrap();
        assert!(e2.residual < 1e-3);
        assert!(e2.coeffs[1].norm() > 1.0 && e2.coeffs[2].norm() > 1.0);
    }

    #[test]
    fn power_and_rotation_checks() {
        let s = SymbolSpec::affine(c(0.5), c(0.25)).unwrap();
        let j = conjugation_ja(0.5, 128).unwrap();
        assert!(power_symmetry_check(&s, 2, &j, 128, 16).unwrap() < 1e-9);
        assert!(power_symmetry_check(&s, 0, &j, 128, 16).is_err());
        let d = rotation_equivalence_check(DiskPoint::real(0.5).unwrap(), c(0.3), 64, 16).unwrap();
        assert_eq!(d, 0.0);
    }
}
