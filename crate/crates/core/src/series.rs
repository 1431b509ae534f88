//! Truncated power series and the H² inner product.
//!
//! A [`TaylorSeries`] of order `N` stores the coefficients of `z^0..=z^N`.
//! Every binary operation requires equal orders; callers re-truncate first.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub type Complex = num_complex::Complex64;

/// Minimum distance of `φ(0)` from the unit circle accepted by [`TaylorSeries::compose`].
pub const COMPOSE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSeries {
    coeffs: Vec<Complex>,
}

fn check_finite(coeffs: &[Complex]) -> Result<()> {
    match coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
        Some(k) => Err(LabError::domain(format!("coefficient {k} is not finite"))),
        None => Ok(()),
    }
}

impl TaylorSeries {
    /// Builds a series of order `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<Complex>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(LabError::usage("a series needs at least one coefficient"));
        }
        check_finite(&coeffs)?;
        Ok(Self { coeffs })
    }

    /// Builds a series of the given order, zero-padding or truncating `coeffs`.
    pub fn from_coeffs(coeffs: &[Complex], order: usize) -> Result<Self> {
        let mut v = vec![Complex::new(0.0, 0.0); order + 1];
        for (dst, src) in v.iter_mut().zip(coeffs) {
            *dst = *src;
        }
        Self::new(v)
    }

    pub fn from_real(coeffs: &[f64], order: usize) -> Result<Self> {
        let c: Vec<Complex> = coeffs.iter().map(|&x| Complex::new(x, 0.0)).collect();
        Self::from_coeffs(&c, order)
    }

    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![Complex::new(0.0, 0.0); order + 1] }
    }

    pub fn constant(c: Complex, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(Complex::new(1.0, 0.0), order)
    }

    /// `z^k`, or the zero series when `k > order`.
    pub fn monomial(k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = Complex::new(1.0, 0.0);
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn into_coeffs(self) -> Vec<Complex> {
        self.coeffs
    }

    /// Re-truncates (or zero-pads) to a new order.
    pub fn with_order(&self, order: usize) -> Self {
        let mut v = vec![Complex::new(0.0, 0.0); order + 1];
        for (dst, src) in v.iter_mut().zip(&self.coeffs) {
            *dst = *src;
        }
        Self { coeffs: v }
    }

    fn check_same_order(&self, other: &Self, op: &str) -> Result<()> {
        if self.order() != other.order() {
            return Err(LabError::usage(format!(
                "{op}: truncation orders differ ({} vs {})",
                self.order(),
                other.order()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_order(other, "add")?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_order(other, "sub")?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self { coeffs })
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_order(other, "mul")?;
        Ok(Self { coeffs: cauchy_truncated(&self.coeffs, &other.coeffs) })
    }

    /// `self^n`, with `self^0 = 1`.
    pub fn pow(&self, n: usize) -> Self {
        let mut acc = Self::one(self.order());
        for _ in 0..n {
            acc.coeffs = cauchy_truncated(&acc.coeffs, &self.coeffs);
        }
        acc
    }

    /// Truncation of `self ∘ φ` by Horner accumulation over powers of `φ`.
    pub fn compose(&self, phi: &Self) -> Result<Self> {
        self.check_same_order(phi, "compose")?;
        let p0 = phi.coeffs[0].norm();
        if p0 > 1.0 - COMPOSE_MARGIN {
            return Err(LabError::domain(format!(
                "compose: |φ(0)| = {p0} is not inside the disk with margin {COMPOSE_MARGIN:e}"
            )));
        }
        let n = self.order();
        let mut acc = vec![Complex::new(0.0, 0.0); n + 1];
        acc[0] = self.coeffs[n];
        for k in (0..n).rev() {
            acc = cauchy_truncated(&acc, &phi.coeffs);
            acc[0] += self.coeffs[k];
        }
        Ok(Self { coeffs: acc })
    }

    /// Termwise derivative, zero-padded back to the original order.
    pub fn differentiate(&self) -> Self {
        let n = self.order();
        let mut v = vec![Complex::new(0.0, 0.0); n + 1];
        for k in 0..n {
            v[k] = self.coeffs[k + 1] * (k + 1) as f64;
        }
        Self { coeffs: v }
    }

    /// Horner evaluation of the truncated polynomial at an interior point.
    pub fn evaluate(&self, z: Complex) -> Result<Complex> {
        if !(z.norm() < 1.0) {
            return Err(LabError::domain(format!("evaluate: |z| = {} is not < 1", z.norm())));
        }
        Ok(self.horner(z))
    }

    pub(crate) fn horner(&self, z: Complex) -> Complex {
        self.coeffs.iter().rev().fold(Complex::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// `⟨f, g⟩ = Σ f̂(k) conj(ĝ(k))`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex> {
        self.check_same_order(other, "inner_product")?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ℓ² norm of the first `len` coefficients.
    pub fn leading_norm(&self, len: usize) -> f64 {
        self.coeffs.iter().take(len).map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest coefficient difference over the first `len` coefficients.
    pub fn max_abs_diff(&self, other: &Self, len: usize) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .take(len)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Coefficientwise conjugate: the matrix action of `(Jf)(z) = conj(f(conj z))`.
    pub fn conj(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }

    /// Coefficients of `f(z + shift)`, truncated at the same order.
    ///
    /// Formal Taylor shift; `shift` need not keep the disk invariant.
    pub fn taylor_shift(&self, shift: Complex) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let next = c[j + 1];
                c[j] += shift * next;
            }
        }
        Self { coeffs: c }
    }
}

/// Cauchy product of equal-length coefficient slices, truncated to that length.
pub(crate) fn cauchy_truncated(a: &[Complex], b: &[Complex]) -> Vec<Complex> {
    let n = a.len();
    let mut out = vec![Complex::new(0.0, 0.0); n];
    for (i, &ai) in a.iter().enumerate() {
        if ai.re == 0.0 && ai.im == 0.0 {
            continue;
        }
        for (o, &bj) in out[i..].iter_mut().zip(b) {
            *o += ai * bj;
        }
    }
    out
}

/// On-disk form of a series: `{ "truncation_order": N, "coeffs": [[re, im], ...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesFile {
    pub truncation_order: usize,
    pub coeffs: Vec<[f64; 2]>,
}

impl SeriesFile {
    pub fn from_series(s: &TaylorSeries) -> Self {
        Self {
            truncation_order: s.order(),
            coeffs: s.coeffs().iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn into_series(self) -> Result<TaylorSeries> {
        if self.coeffs.len() != self.truncation_order + 1 {
            return Err(LabError::usage(format!(
                "series file: truncation_order {} requires {} coefficient pairs, found {}",
                self.truncation_order,
                self.truncation_order + 1,
                self.coeffs.len()
            )));
        }
        TaylorSeries::new(self.coeffs.into_iter().map(|[re, im]| Complex::new(re, im)).collect())
    }

    pub fn parse(text: &str) -> Result<TaylorSeries> {
        let file: SeriesFile = serde_json::from_str(text)
            .map_err(|e| LabError::usage(format!("series file: {e}")))?;
        file.into_series()
    }

    pub fn load(path: &Path) -> Result<TaylorSeries> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(s: &TaylorSeries, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&Self::from_series(s))
            .map_err(|e| LabError::Io(e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }
}
