//! Reproducing kernels `K_a^{(n)}` and the symbol families used throughout:
//! affine maps, the involutive automorphism `φ_a(z) = (a - z)/(1 - ā z)`,
//! the Blaschke pair `Φ_{a,λ} = φ_a ∘ (λ φ_a)`, rotations, and custom series.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{LabError, Result};
use crate::series::{Complex, TaylorSeries, COMPOSE_MARGIN};

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint(Complex);

impl DiskPoint {
    pub fn new(value: Complex) -> Result<Self> {
        if !value.re.is_finite() || !value.im.is_finite() || !(value.norm() < 1.0) {
            return Err(LabError::domain(format!("{value} is not in the open unit disk")));
        }
        Ok(Self(value))
    }

    pub fn real(x: f64) -> Result<Self> {
        Self::new(Complex::new(x, 0.0))
    }

    pub fn value(self) -> Complex {
        self.0
    }
}

/// A self-map of the disk.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSpec {
    /// `c z + d`
    Affine { c: Complex, d: Complex },
    /// `φ_a(z) = (a - z)/(1 - ā z)`
    Automorphism { a: DiskPoint },
    /// `Φ_{a,λ}(z) = φ_a(λ φ_a(z))`, fixing `a` with multiplier `λ`.
    BlaschkePair { a: DiskPoint, lambda: Complex },
    /// `e^{iθ} z`
    Rotation { theta: f64 },
    Custom { series: TaylorSeries },
}

/// Grid size for the affine self-map test.
const AFFINE_GRID: usize = 1024;
const NEWTON_MAX_STEPS: usize = 100;
const NEWTON_TOL: f64 = 1e-14;

impl SymbolSpec {
    pub fn affine(c: Complex, d: Complex) -> Result<Self> {
        let s = SymbolSpec::Affine { c, d };
        s.validate()?;
        Ok(s)
    }

    pub fn blaschke_pair(a: Complex, lambda: Complex) -> Result<Self> {
        let s = SymbolSpec::BlaschkePair { a: DiskPoint::new(a)?, lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn automorphism(a: Complex) -> Result<Self> {
        Ok(SymbolSpec::Automorphism { a: DiskPoint::new(a)? })
    }

    /// Checks that the parameters describe a self-map of the disk.
    pub fn validate(&self) -> Result<()> {
        match self {
            SymbolSpec::Affine { c, d } => {
                if ![c.re, c.im, d.re, d.im].iter().all(|x| x.is_finite()) {
                    return Err(LabError::domain("affine: non-finite parameter"));
                }
                let max = (0..AFFINE_GRID)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / AFFINE_GRID as f64;
                        (c * Complex::from_polar(1.0, t) + d).norm()
                    })
                    .fold(0.0, f64::max);
                if max >= 1.0 + 1e-12 {
                    return Err(LabError::domain(format!(
                        "affine map {c}·z + {d} does not send the disk into itself (max |φ| on the circle = {max})"
                    )));
                }
                Ok(())
            }
            SymbolSpec::Automorphism { .. } => Ok(()),
            SymbolSpec::BlaschkePair { lambda, .. } => {
                let r = lambda.norm();
                if !(r > 0.0 && r < 1.0) {
                    return Err(LabError::domain(format!("blaschke pair: need 0 < |λ| < 1, got |λ| = {r}")));
                }
                Ok(())
            }
            SymbolSpec::Rotation { theta } => {
                if theta.is_finite() {
                    Ok(())
                } else {
                    Err(LabError::domain("rotation: non-finite angle"))
                }
            }
            SymbolSpec::Custom { series } => {
                let p0 = series.coeff(0).norm();
                if p0 > 1.0 - COMPOSE_MARGIN {
                    return Err(LabError::domain(format!("custom symbol: |φ(0)| = {p0} is not inside the disk")));
                }
                Ok(())
            }
        }
    }

    /// The same map conjugated by a rotation: `e^{-iθ} φ(e^{iθ} z)`.
    pub fn rotated(&self, theta: f64, order: usize) -> Result<SymbolSpec> {
        let u = Complex::from_polar(1.0, theta);
        Ok(match self {
            SymbolSpec::Affine { c, d } => SymbolSpec::Affine { c: *c, d: d / u },
            SymbolSpec::Automorphism { a } => SymbolSpec::Automorphism { a: DiskPoint::new(a.value() / u)? },
            SymbolSpec::BlaschkePair { a, lambda } => {
                SymbolSpec::BlaschkePair { a: DiskPoint::new(a.value() / u)?, lambda: *lambda }
            }
            SymbolSpec::Rotation { theta: t } => SymbolSpec::Rotation { theta: *t },
            SymbolSpec::Custom { series } => {
                let s = series.with_order(order);
                let coeffs: Vec<Complex> = s
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * u.powi(k as i32 - 1))
                    .collect();
                SymbolSpec::Custom { series: TaylorSeries::new(coeffs)? }
            }
        })
    }
}

impl fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolSpec::Affine { c, d } => write!(f, "affine:{},{},{},{}", c.re, c.im, d.re, d.im),
            SymbolSpec::Automorphism { a } => write!(f, "auto:{},{}", a.value().re, a.value().im),
            SymbolSpec::BlaschkePair { a, lambda } => {
                write!(f, "bpair:{},{},{},{}", a.value().re, a.value().im, lambda.re, lambda.im)
            }
            SymbolSpec::Rotation { theta } => write!(f, "rot:{theta}"),
            SymbolSpec::Custom { series } => write!(f, "custom:order={}", series.order()),
        }
    }
}

/// `K_a^{(n)}(z) = Σ_{m≥n} m!/(m-n)! · conj(a)^{m-n} z^m`, the kernel for `f ↦ f^{(n)}(a)`.
pub fn kernel_series(a: DiskPoint, n: usize, order: usize) -> Result<TaylorSeries> {
    if n > order {
        return Err(LabError::usage(format!("kernel_series: derivative order {n} exceeds truncation {order}")));
    }
    let ab = a.value().conj();
    let mut coeffs = vec![Complex::new(0.0, 0.0); order + 1];
    let mut pow = Complex::new(1.0, 0.0);
    for m in n..=order {
        let falling: f64 = ((m - n + 1)..=m).map(|i| i as f64).product();
        coeffs[m] = pow * falling;
        pow *= ab;
    }
    TaylorSeries::new(coeffs)
}

/// Closed forms of `|K_a'(a)|`, `‖K_a‖` and `‖K_a'‖` for real `a ∈ (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelClosedForms {
    pub k1_at_a: f64,
    pub norm_k: f64,
    pub norm_k1: f64,
}

pub fn kernel_closed_forms(a: f64) -> Result<KernelClosedForms> {
    if !(a > 0.0 && a < 1.0) {
        return Err(LabError::domain(format!("kernel closed forms need 0 < a < 1, got {a}")));
    }
    let q = 1.0 - a * a;
    Ok(KernelClosedForms {
        k1_at_a: a / (q * q),
        norm_k: q.powf(-0.5),
        norm_k1: (a * a + 1.0).sqrt() / q.powf(1.5),
    })
}

/// Series-summed counterparts of [`KernelClosedForms`]; valid for any disk point.
pub fn kernel_series_sums(a: DiskPoint, order: usize) -> Result<KernelClosedForms> {
    let k0 = kernel_series(a, 0, order)?;
    let k1 = kernel_series(a, 1, order)?;
    Ok(KernelClosedForms {
        k1_at_a: k1.evaluate(a.value())?.norm(),
        norm_k: k0.norm(),
        norm_k1: k1.norm(),
    })
}

fn automorphism_series(a: Complex, order: usize) -> Result<TaylorSeries> {
    let mut coeffs = vec![a];
    let scale = 1.0 - a.norm_sqr();
    let mut pow = Complex::new(1.0, 0.0);
    for _ in 1..=order {
        coeffs.push(-pow * scale);
        pow *= a.conj();
    }
    TaylorSeries::new(coeffs)
}

/// Truncated Taylor expansion of the symbol.
pub fn symbol_series(s: &SymbolSpec, order: usize) -> Result<TaylorSeries> {
    s.validate()?;
    match s {
        SymbolSpec::Affine { c, d } => TaylorSeries::from_coeffs(&[*d, *c], order),
        SymbolSpec::Automorphism { a } => automorphism_series(a.value(), order),
        SymbolSpec::BlaschkePair { a, lambda } => {
            let phi = automorphism_series(a.value(), order)?;
            phi.compose(&phi.scale(*lambda))
        }
        SymbolSpec::Rotation { theta } => {
            TaylorSeries::from_coeffs(&[Complex::new(0.0, 0.0), Complex::from_polar(1.0, *theta)], order)
        }
        SymbolSpec::Custom { series } => Ok(series.with_order(order)),
    }
}

/// Interior fixed point `a` and multiplier `λ = φ'(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub point: DiskPoint,
    pub multiplier: Complex,
    /// `0 < |λ| < 1`
    pub schroeder: bool,
}

impl FixedPoint {
    fn new(point: DiskPoint, multiplier: Complex) -> Self {
        let r = multiplier.norm();
        Self { point, multiplier, schroeder: r > 0.0 && r < 1.0 }
    }
}

fn newton_fixed_point(phi: &TaylorSeries) -> Result<FixedPoint> {
    let dphi = phi.differentiate();
    let mut z = Complex::new(0.0, 0.0);
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_STEPS {
        let g = phi.horner(z) - z;
        residual = g.norm();
        if residual < NEWTON_TOL {
            let point = DiskPoint::new(z)?;
            return Ok(FixedPoint::new(point, dphi.horner(z)));
        }
        let dg = dphi.horner(z) - 1.0;
        if dg.norm() == 0.0 {
            break;
        }
        z -= g / dg;
        if !(z.norm() < 1.0) {
            break;
        }
    }
    Err(LabError::Convergence {
        message: "no interior fixed point found by Newton iteration from 0".into(),
        residual,
    })
}

pub fn fixed_point(s: &SymbolSpec, order: usize) -> Result<FixedPoint> {
    s.validate()?;
    match s {
        SymbolSpec::Affine { c, d } => {
            let denom = Complex::new(1.0, 0.0) - c;
            if denom.norm() == 0.0 {
                return Err(LabError::Convergence {
                    message: "affine map with c = 1 has no isolated fixed point".into(),
                    residual: d.norm(),
                });
            }
            let a = d / denom;
            let point = DiskPoint::new(a).map_err(|_| LabError::Convergence {
                message: format!("affine fixed point {a} lies outside the disk"),
                residual: f64::INFINITY,
            })?;
            Ok(FixedPoint::new(point, *c))
        }
        SymbolSpec::BlaschkePair { a, lambda } => Ok(FixedPoint::new(*a, *lambda)),
        SymbolSpec::Rotation { theta } => {
            Ok(FixedPoint::new(DiskPoint::real(0.0)?, Complex::from_polar(1.0, *theta)))
        }
        SymbolSpec::Automorphism { .. } | SymbolSpec::Custom { .. } => {
            newton_fixed_point(&symbol_series(s, order)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    #[test]
    fn kernel_series_cases() {
        let k = kernel_series(DiskPoint::real(0.0).unwrap(), 0, 8).unwrap();
        assert_eq!(k, TaylorSeries::one(8));

        let a = DiskPoint::real(0.5).unwrap();
        let k0 = kernel_series(a, 0, 10).unwrap();
        for m in 0..=10 {
            assert_abs_diff_eq!(k0.coeff(m).re, 0.5f64.powi(m as i32), epsilon = 1e-15);
        }
        let k1 = kernel_series(a, 1, 10).unwrap();
        assert_eq!(k1.coeff(0), c(0.0));
        for m in 1..=10 {
            assert_abs_diff_eq!(k1.coeff(m).re, m as f64 * 0.5f64.powi(m as i32 - 1), epsilon = 1e-14);
        }
        assert!(matches!(kernel_series(a, 11, 10), Err(LabError::Usage(_))));
    }

    #[test]
    fn kernel_uses_conjugate_point() {
        let a = DiskPoint::new(Complex::new(0.0, 0.5)).unwrap();
        let k = kernel_series(a, 0, 3).unwrap();
        assert_eq!(k.coeff(1), Complex::new(0.0, -0.5));
    }

    #[test]
    fn closed_forms_against_direct_sums() {
        let cf = kernel_closed_forms(0.5).unwrap();
        // independent oracles: Σ m a^{2m-1} and sqrt(Σ m² a^{2(m-1)})
        let a: f64 = 0.5;
        let k1: f64 = (1..400).map(|m| m as f64 * a.powi(2 * m - 1)).sum();
        let n1: f64 = (1..400).map(|m| (m * m) as f64 * a.powi(2 * (m - 1))).sum::<f64>().sqrt();
        assert_abs_diff_eq!(cf.k1_at_a, 0.8888888889, epsilon = 1e-9);
        assert_abs_diff_eq!(cf.k1_at_a, k1, epsilon = 1e-12);
        assert_abs_diff_eq!(cf.norm_k1, 1.7213259, epsilon = 1e-6);
        assert_abs_diff_eq!(cf.norm_k1, n1, epsilon = 1e-12);
        assert_abs_diff_eq!(kernel_closed_forms(1e-9).unwrap().norm_k, 1.0, epsilon = 1e-12);
        assert!(kernel_closed_forms(0.0).is_err());
        assert!(kernel_closed_forms(1.0).is_err());
    }

    #[test]
    fn symbol_series_cases() {
        let theta = 0.7;
        let r = symbol_series(&SymbolSpec::Rotation { theta }, 4).unwrap();
        assert_eq!(r.coeff(1), Complex::from_polar(1.0, theta));
        assert_eq!(r.coeff(0), c(0.0));

        let auto = symbol_series(&SymbolSpec::automorphism(c(0.5)).unwrap(), 8).unwrap();
        assert_abs_diff_eq!(auto.coeff(0).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(auto.coeff(1).re, -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(auto.coeff(2).re, -0.375, epsilon = 1e-15);

        let bp = SymbolSpec::blaschke_pair(c(0.5), c(0.3)).unwrap();
        let s = symbol_series(&bp, 128).unwrap();
        assert_abs_diff_eq!((s.evaluate(c(0.5)).unwrap() - c(0.5)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn affine_validation() {
        assert!(SymbolSpec::affine(c(0.5), c(0.25)).is_ok());
        assert!(SymbolSpec::affine(c(0.5), c(0.5)).is_ok());
        assert!(matches!(SymbolSpec::affine(c(0.6), c(0.5)), Err(LabError::Domain(_))));
        assert!(SymbolSpec::blaschke_pair(c(0.5), c(0.0)).is_err());
        assert!(SymbolSpec::blaschke_pair(c(0.5), c(1.0)).is_err());
        assert!(SymbolSpec::blaschke_pair(c(1.0), c(0.3)).is_err());
    }

    #[test]
    fn fixed_point_cases() {
        let fp = fixed_point(&SymbolSpec::affine(c(0.5), c(0.25)).unwrap(), 64).unwrap();
        assert_eq!(fp.point.value(), c(0.5));
        assert_eq!(fp.multiplier, c(0.5));
        assert!(fp.schroeder);

        let a = Complex::from_polar(0.5, PI / 3.0);
        let fp = fixed_point(&SymbolSpec::blaschke_pair(a, c(0.3)).unwrap(), 64).unwrap();
        assert_eq!(fp.point.value(), a);
        assert_eq!(fp.multiplier, c(0.3));

        let fp = fixed_point(&SymbolSpec::Rotation { theta: 1.0 }, 64).unwrap();
        assert_eq!(fp.point.value(), c(0.0));
        assert!(!fp.schroeder);
    }

    #[test]
    fn newton_recovers_blaschke_fixed_point_from_custom_series() {
        let bp = SymbolSpec::blaschke_pair(c(0.5), Complex::new(0.0, 0.5)).unwrap();
        let custom = SymbolSpec::Custom { series: symbol_series(&bp, 128).unwrap() };
        let fp = fixed_point(&custom, 128).unwrap();
        assert_abs_diff_eq!((fp.point.value() - c(0.5)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((fp.multiplier - Complex::new(0.0, 0.5)).norm(), 0.0, epsilon = 1e-10);
        assert!(fp.schroeder);
    }

    #[test]
    fn automorphism_fixed_point_is_elliptic() {
        let fp = fixed_point(&SymbolSpec::automorphism(c(0.5)).unwrap(), 128).unwrap();
        let expected = (1.0 - 0.75f64.sqrt()) / 0.5;
        assert_abs_diff_eq!(fp.point.value().re, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(fp.multiplier.norm(), 1.0, epsilon = 1e-10);
        assert!(!fp.schroeder);
    }

    #[test]
    fn affine_without_interior_fixed_point() {
        let s = SymbolSpec::Affine { c: c(0.5), d: c(0.5) };
        // fixed point d/(1-c) = 1 lies on the boundary
        assert!(matches!(fixed_point(&s, 16), Err(LabError::Convergence { .. })));
    }

    #[test]
    fn display_uses_cli_grammar() {
        assert_eq!(SymbolSpec::affine(c(0.5), c(0.25)).unwrap().to_string(), "affine:0.5,0,0.25,0");
        assert_eq!(SymbolSpec::Rotation { theta: 1.5 }.to_string(), "rot:1.5");
    }
}
