//! Koenigs eigenfunction `σ` of a Schröder map, solving `σ ∘ φ = λ σ` with
//! `λ = φ'(a)`, computed two independent ways:
//!
//! * [`koenigs_iterate`]: the classical limit `σ = lim (φ^{[n]} - a)/λ^n`;
//! * [`koenigs_recurrence`]: a triangular coefficient solve after moving the
//!   fixed point to the origin.
//!
//! Both return `σ` normalized by `σ(a) = 0`, `σ'(a) = 1`.

use crate::error::{LabError, Result};
use crate::kernels::{fixed_point, symbol_series, DiskPoint, FixedPoint, SymbolSpec};
use crate::series::{cauchy_truncated, Complex, TaylorSeries};

pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct KoenigsResult {
    pub sigma: TaylorSeries,
    pub a: DiskPoint,
    pub multiplier: Complex,
    /// Iterations for [`koenigs_iterate`]; number of solved coefficients for [`koenigs_recurrence`].
    pub iterations_used: usize,
    /// `‖σ∘φ - λσ‖` over the leading `N/2` coefficients.
    pub residual: f64,
    /// Max-coefficient difference between successive iterates (empty for the recurrence).
    pub step_history: Vec<f64>,
}

fn schroeder_fixed_point(s: &SymbolSpec, order: usize) -> Result<FixedPoint> {
    let fp = fixed_point(s, order)?;
    if !fp.schroeder {
        return Err(LabError::domain(format!(
            "{s} is not a Schröder map: |φ'(a)| = {}",
            fp.multiplier.norm()
        )));
    }
    Ok(fp)
}

/// Powers `φ^0..=φ^N` as coefficient vectors, i.e. the columns of `C_φ`.
pub(crate) fn symbol_powers(phi: &TaylorSeries) -> Vec<Vec<Complex>> {
    let n = phi.order();
    let mut out = Vec::with_capacity(n + 1);
    let mut p = TaylorSeries::one(n).into_coeffs();
    for _ in 0..=n {
        let next = cauchy_truncated(&p, phi.coeffs());
        out.push(p);
        p = next;
    }
    out
}

/// `f ∘ φ` given the power table of `φ`.
fn compose_with_powers(f: &TaylorSeries, powers: &[Vec<Complex>]) -> TaylorSeries {
    let n = f.order();
    let mut out = vec![Complex::new(0.0, 0.0); n + 1];
    for (fj, col) in f.coeffs().iter().zip(powers) {
        if fj.norm() == 0.0 {
            continue;
        }
        for (o, c) in out.iter_mut().zip(col) {
            *o += fj * c;
        }
    }
    TaylorSeries::new(out).expect("finite inputs give finite outputs")
}

/// `‖σ∘φ - λσ‖` on the leading `len` coefficients.
pub fn eigen_residual(sigma: &TaylorSeries, phi: &TaylorSeries, lambda: Complex, len: usize) -> Result<f64> {
    let lhs = sigma.compose(phi)?;
    Ok(lhs.sub(&sigma.scale(lambda))?.leading_norm(len))
}

fn residual_with_powers(sigma: &TaylorSeries, powers: &[Vec<Complex>], lambda: Complex) -> f64 {
    let lhs = compose_with_powers(sigma, powers);
    let diff = lhs.sub(&sigma.scale(lambda)).expect("same order");
    diff.leading_norm(sigma.order() / 2)
}

/// Re-imposes `σ(a) = 0`, `σ'(a) = 1`.
fn normalize_at(sigma: &TaylorSeries, a: Complex) -> Result<TaylorSeries> {
    let shifted = sigma.sub(&TaylorSeries::constant(sigma.horner(a), sigma.order()))?;
    let d = shifted.differentiate().horner(a);
    if d.norm() == 0.0 {
        return Err(LabError::IllConditioned("iterate has vanishing derivative at the fixed point".into()));
    }
    Ok(shifted.scale(d.inv()))
}

/// Koenigs iteration `σ_{n+1} = (σ_n ∘ φ)/λ` from `σ_0 = z - a`, which equals
/// `(φ^{[n]} - a)/λ^n`. The normalization at `a` is re-imposed every step:
/// dividing by `λ` amplifies rounding in the constant direction by `1/|λ|` per
/// step otherwise.
pub fn koenigs_iterate(s: &SymbolSpec, order: usize, tol: f64, max_iter: usize) -> Result<KoenigsResult> {
    let fp = schroeder_fixed_point(s, order)?;
    let a = fp.point.value();
    let lambda = fp.multiplier;
    let phi = symbol_series(s, order)?;
    let powers = symbol_powers(&phi);

    let mut sigma = TaylorSeries::from_coeffs(&[-a, Complex::new(1.0, 0.0)], order)?;
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let next = compose_with_powers(&sigma, &powers).scale(lambda.inv());
        let next = normalize_at(&next, a)?;
        let step = next.max_abs_diff(&sigma, order + 1);
        history.push(step);
        sigma = next;
        if step < tol {
            let residual = residual_with_powers(&sigma, &powers, lambda);
            return Ok(KoenigsResult {
                sigma,
                a: fp.point,
                multiplier: lambda,
                iterations_used: it,
                residual,
                step_history: history,
            });
        }
    }
    Err(LabError::Convergence {
        message: format!("Koenigs iteration did not reach {tol:e} in {max_iter} steps"),
        residual: history.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Extra working terms carried by the recurrence, as a fraction of the order.
const RECURRENCE_GUARD_DIV: usize = 2;

/// Eigen residual above which the recurrence result is rejected.
const RECURRENCE_RESIDUAL_LIMIT: f64 = 1e-6;

/// Triangular solve of `σ̃ ∘ ψ = λ σ̃` for `ψ(w) = φ(w + a) - a`, then `σ(z) = σ̃(z - a)`.
///
/// Shifting back from the disk centered at `a` mixes every higher coefficient
/// into each lower one, so the solve runs at `order + order/2` and truncates.
///
/// Rounding noise in coefficient `k` of `σ̃` reaches coefficient `i` of `σ`
/// scaled by roughly `(R - |a|)^-i`, with `R` the distance from `a` to the
/// nearest singularity of `φ` or `σ`. The route is only usable when `R > 1 + |a|`;
/// otherwise the residual check below returns [`LabError::IllConditioned`].
pub fn koenigs_recurrence(s: &SymbolSpec, order: usize) -> Result<KoenigsResult> {
    let fp = schroeder_fixed_point(s, order)?;
    let a = fp.point.value();
    let phi = symbol_series(s, order)?;
    let work = order + order / RECURRENCE_GUARD_DIV;

    let mut psi = symbol_series(s, work)?.taylor_shift(a).into_coeffs();
    psi[0] = Complex::new(0.0, 0.0);
    let lambda = psi.get(1).copied().unwrap_or_default();

    let mut tilde = vec![Complex::new(0.0, 0.0); work + 1];
    if work >= 1 {
        tilde[1] = Complex::new(1.0, 0.0);
    }
    // powers[j] = ψ^j, built lazily; only j < k is needed for coefficient k.
    let mut powers: Vec<Vec<Complex>> = vec![psi.clone()];
    let mut lambda_k = lambda;
    for k in 2..=work {
        lambda_k *= lambda;
        let denom = lambda - lambda_k;
        if denom.norm() < 1e-13 {
            return Err(LabError::IllConditioned(format!("|λ^{k} - λ| = {:e} is too small", denom.norm())));
        }
        let acc: Complex = (1..k).map(|j| tilde[j] * powers[j - 1][k]).sum();
        tilde[k] = acc / denom;
        let next = cauchy_truncated(&powers[k - 2], &psi);
        powers.push(next);
    }
    let unstable = |detail: String| {
        LabError::IllConditioned(format!("recentered expansion around a = {a} is unstable: {detail}"))
    };
    if tilde.iter().any(|c| !c.is_finite()) {
        return Err(unstable("coefficients overflow".into()));
    }
    let sigma = TaylorSeries::new(tilde)?.taylor_shift(-a).with_order(order);
    let residual = eigen_residual(&sigma, &phi, fp.multiplier, order / 2)?;
    if !(residual <= RECURRENCE_RESIDUAL_LIMIT) {
        return Err(unstable(format!("eigen residual {residual:e}")));
    }
    Ok(KoenigsResult {
        sigma,
        a: fp.point,
        multiplier: fp.multiplier,
        iterations_used: work.saturating_sub(1),
        residual,
        step_history: Vec::new(),
    })
}

/// `[σ^0 = 1, σ, ..., σ^m]`, each truncated at `order`.
pub fn koenigs_sequence(sigma: &TaylorSeries, m: usize, order: usize) -> Vec<TaylorSeries> {
    let s = sigma.with_order(order);
    let mut out = Vec::with_capacity(m + 1);
    let mut p = TaylorSeries::one(order);
    for _ in 0..=m {
        let next = p.mul(&s).expect("same order");
        out.push(p);
        p = next;
    }
    out
}

pub fn renormalize_unit_norm(sigma: &TaylorSeries) -> Result<TaylorSeries> {
    let n = sigma.norm();
    if n == 0.0 {
        return Err(LabError::usage("cannot normalize the zero series"));
    }
    Ok(sigma.scale(Complex::new(1.0 / n, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    fn affine() -> SymbolSpec {
        SymbolSpec::affine(c(0.5), c(0.25)).unwrap()
    }

    fn z_minus(a: f64, order: usize) -> TaylorSeries {
        TaylorSeries::from_real(&[-a, 1.0], order).unwrap()
    }

    #[test]
    fn affine_iterate_is_exact() {
        let r = koenigs_iterate(&affine(), 64, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(r.sigma.max_abs_diff(&z_minus(0.5, 64), 65) < 1e-12);
        assert_abs_diff_eq!((r.sigma.differentiate().horner(c(0.5)) - 1.0).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn affine_recurrence_is_exact() {
        let r = koenigs_recurrence(&affine(), 64).unwrap();
        assert!(r.sigma.max_abs_diff(&z_minus(0.5, 64), 65) < 1e-12);
        assert_eq!(r.sigma.horner(c(0.5)).norm(), 0.0);
    }

    #[test]
    fn blaschke_pair_routes_agree_with_scaled_automorphism() {
        let order = 128;
        let s = SymbolSpec::blaschke_pair(c(0.5), c(0.3)).unwrap();
        let it = koenigs_iterate(&s, order, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let rec = koenigs_recurrence(&s, order).unwrap();
        let auto = symbol_series(&SymbolSpec::automorphism(c(0.5)).unwrap(), order).unwrap();
        let expected = auto.scale(c(-0.75));
        assert!(it.sigma.max_abs_diff(&expected, order / 2) < 1e-8);
        assert!(rec.sigma.max_abs_diff(&expected, order / 2) < 1e-8);
        assert!(it.sigma.max_abs_diff(&rec.sigma, order / 2) < 1e-8);
        assert!(it.residual < 1e-8 && rec.residual < 1e-8);
    }

    #[test]
    fn recurrence_rejects_singularity_near_the_disk() {
        // Pole of φ at about 1.19, distance 0.59 from a.
        let s = SymbolSpec::blaschke_pair(c(0.6), c(-0.7)).unwrap();
        assert!(matches!(koenigs_recurrence(&s, 128), Err(LabError::IllConditioned(_))));
        assert!(koenigs_iterate(&s, 128, DEFAULT_TOL, DEFAULT_MAX_ITER).is_ok());
    }

    #[test]
    fn successive_differences_decrease() {
        let s = SymbolSpec::blaschke_pair(c(0.5), Complex::new(0.0, 0.5)).unwrap();
        let r = koenigs_iterate(&s, 128, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let h = &r.step_history;
        assert!(h.len() > 6);
        for w in h[5..].windows(2) {
            assert!(w[1] < w[0], "history not monotone: {h:?}");
        }
    }

    #[test]
    fn non_schroeder_rejected() {
        let rot = SymbolSpec::Rotation { theta: 0.3 };
        assert!(matches!(koenigs_iterate(&rot, 16, DEFAULT_TOL, 10), Err(LabError::Domain(_))));
        assert!(matches!(koenigs_recurrence(&rot, 16), Err(LabError::Domain(_))));
    }

    #[test]
    fn max_iter_exceeded_reports_residual() {
        let s = SymbolSpec::blaschke_pair(c(0.5), c(0.9)).unwrap();
        match koenigs_iterate(&s, 64, DEFAULT_TOL, 3) {
            Err(LabError::Convergence { residual, .. }) => assert!(residual > 0.0 && residual.is_finite()),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn sequence_cases() {
        let seq = koenigs_sequence(&z_minus(0.5, 4), 0, 4);
        assert_eq!(seq, vec![TaylorSeries::one(4)]);
        let seq = koenigs_sequence(&z_minus(0.5, 4), 2, 4);
        assert_eq!(seq[1], z_minus(0.5, 4));
        assert_eq!(seq[2], TaylorSeries::from_real(&[0.25, -1.0, 1.0], 4).unwrap());
    }

    #[test]
    fn affine_sequence_is_eigen() {
        let order = 64;
        let phi = symbol_series(&affine(), order).unwrap();
        for (n, sn) in koenigs_sequence(&z_minus(0.5, order), 10, order).iter().enumerate() {
            let r = eigen_residual(sn, &phi, c(0.5f64.powi(n as i32)), order / 2).unwrap();
            assert!(r < 1e-9, "n = {n}: {r}");
        }
    }

    #[test]
    fn renormalize_cases() {
        let order = 200;
        let auto = symbol_series(&SymbolSpec::automorphism(c(0.5)).unwrap(), order).unwrap();
        let u = renormalize_unit_norm(&auto.scale(c(-0.75))).unwrap();
        assert_abs_diff_eq!(u.norm(), 1.0, epsilon = 1e-12);
        assert!(u.max_abs_diff(&auto.scale(c(-1.0)), order + 1) < 1e-10);
        let again = renormalize_unit_norm(&u).unwrap();
        assert!(again.max_abs_diff(&u, order + 1) < 1e-15);
        assert!(matches!(renormalize_unit_norm(&TaylorSeries::zero(3)), Err(LabError::Usage(_))));
    }
}
