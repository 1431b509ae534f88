//! Operators in the monomial basis `1, z, z², ...`.
//!
//! An [`OperatorMatrix`] of order `N` is `(N+1) × (N+1)` so that it acts on the
//! coefficient vector of a [`TaylorSeries`] of the same order; column `j` is the
//! image of `z^j`. Conjugate-linear maps are stored as a [`ConjugationRep`]:
//! the linear part `A` of `f ↦ A · conj(f̂)`.
//!
//! Truncation corrupts the trailing rows and columns of products, so every
//! defect here is measured on a leading block.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{LabError, Result};
use crate::kernels::{symbol_series, SymbolSpec};
use crate::koenigs::symbol_powers;
use crate::linalg::{self, CMatrix, CVector};
use crate::series::{Complex, TaylorSeries};

/// Largest acceptable 1-norm condition number for the Koenigs similarity.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: CMatrix,
    order: usize,
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(LabError::domain("matrix has non-finite entries"))
    }
}

fn check_block(block: usize, order: usize) -> Result<()> {
    if block == 0 || block > order / 2 {
        return Err(LabError::usage(format!("block {block} must lie in 1..={} for order {order}", order / 2)));
    }
    Ok(())
}

impl OperatorMatrix {
    pub fn from_entries(entries: DMatrix<Complex>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(LabError::usage("operator matrix must be square and non-empty"));
        }
        check_finite(&entries)?;
        let order = entries.nrows() - 1;
        Ok(Self { entries, order })
    }

    pub fn identity(order: usize) -> Self {
        Self { entries: CMatrix::identity(order + 1, order + 1), order }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.order + 1
    }

    pub fn entries(&self) -> &DMatrix<Complex> {
        &self.entries
    }

    pub fn apply(&self, f: &TaylorSeries) -> Result<TaylorSeries> {
        if f.order() != self.order {
            return Err(LabError::usage("apply: series and matrix orders differ"));
        }
        let v = CVector::from_column_slice(f.coeffs());
        TaylorSeries::new((&self.entries * v).iter().copied().collect())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if other.order != self.order {
            return Err(LabError::usage("mul: matrix orders differ"));
        }
        Ok(Self { entries: &self.entries * &other.entries, order: self.order })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.order != self.order {
            return Err(LabError::usage("add: matrix orders differ"));
        }
        Ok(Self { entries: &self.entries + &other.entries, order: self.order })
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self { entries: &self.entries * c, order: self.order }
    }

    /// `M^n` by repeated squaring; `M^0 = I`.
    pub fn pow(&self, n: u32) -> Self {
        let mut result = CMatrix::identity(self.dim(), self.dim());
        let mut base = self.entries.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Self { entries: result, order: self.order }
    }

    /// Row-major CSV of the leading `rows × cols` entries; cells are `re+imi`.
    pub fn to_csv(&self, rows: usize, cols: usize) -> String {
        matrix_csv(&self.entries, rows, cols)
    }
}

pub(crate) fn format_cell(c: Complex) -> String {
    let sign = if c.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", c.re, sign, c.im.abs())
}

pub(crate) fn matrix_csv(m: &CMatrix, rows: usize, cols: usize) -> String {
    let mut out = String::new();
    for i in 0..rows.min(m.nrows()) {
        let line: Vec<String> = (0..cols.min(m.ncols())).map(|j| format_cell(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

/// Linear part `A` of a conjugate-linear operator `f ↦ A · conj(f̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugationRep {
    linear: CMatrix,
    order: usize,
}

/// Defects of the conjugation axioms on a leading block (Frobenius norms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugationDefects {
    /// `‖AᴴA - I‖`
    pub isometry: f64,
    /// `‖A·conj(A) - I‖`
    pub involution: f64,
    /// `‖Aᵀ - A‖`
    pub symmetry: f64,
}

impl ConjugationRep {
    pub fn from_linear_part(linear: DMatrix<Complex>) -> Result<Self> {
        if linear.nrows() != linear.ncols() || linear.nrows() == 0 {
            return Err(LabError::usage("conjugation linear part must be square and non-empty"));
        }
        check_finite(&linear)?;
        let order = linear.nrows() - 1;
        Ok(Self { linear, order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn linear_part(&self) -> &DMatrix<Complex> {
        &self.linear
    }

    pub fn apply(&self, f: &TaylorSeries) -> Result<TaylorSeries> {
        if f.order() != self.order {
            return Err(LabError::usage("apply: series and conjugation orders differ"));
        }
        let v = CVector::from_iterator(self.order + 1, f.coeffs().iter().map(|c| c.conj()));
        TaylorSeries::new((&self.linear * v).iter().copied().collect())
    }

    pub fn defects(&self, block: usize) -> Result<ConjugationDefects> {
        check_block(block, self.order)?;
        let a = &self.linear;
        let n = a.nrows();
        let mut iso = 0.0;
        let mut inv = 0.0;
        let mut sym = 0.0;
        for i in 0..block {
            for j in 0..block {
                let delta = if i == j { 1.0 } else { 0.0 };
                let mut s_iso = Complex::new(-delta, 0.0);
                let mut s_inv = Complex::new(-delta, 0.0);
                for k in 0..n {
                    s_iso += a[(k, i)].conj() * a[(k, j)];
                    s_inv += a[(i, k)] * a[(k, j)].conj();
                }
                iso += s_iso.norm_sqr();
                inv += s_inv.norm_sqr();
                sym += (a[(i, j)] - a[(j, i)]).norm_sqr();
            }
        }
        Ok(ConjugationDefects { isometry: iso.sqrt(), involution: inv.sqrt(), symmetry: sym.sqrt() })
    }

    pub fn to_csv(&self, rows: usize, cols: usize) -> String {
        matrix_csv(&self.linear, rows, cols)
    }
}

/// Matrix of `C_φ`: column `j` holds the coefficients of `φ^j`.
pub fn composition_matrix(s: &SymbolSpec, order: usize) -> Result<OperatorMatrix> {
    let phi = symbol_series(s, order)?;
    Ok(composition_matrix_of_series(&phi))
}

pub fn composition_matrix_of_series(phi: &TaylorSeries) -> OperatorMatrix {
    let powers = symbol_powers(phi);
    let n = phi.order() + 1;
    let entries = CMatrix::from_fn(n, n, |i, j| powers[j][i]);
    OperatorMatrix { entries, order: phi.order() }
}

/// Lower-triangular Toeplitz matrix of `f ↦ h f`.
pub fn multiplication_matrix(h: &TaylorSeries, order: usize) -> OperatorMatrix {
    let h = h.with_order(order);
    let n = order + 1;
    let entries = CMatrix::from_fn(n, n, |i, j| if i >= j { h.coeff(i - j) } else { linalg::zero() });
    OperatorMatrix { entries, order }
}

/// `(Jf)(z) = conj(f(conj z))`: coefficientwise conjugation, linear part `I`.
pub fn conjugation_basic(order: usize) -> ConjugationRep {
    ConjugationRep { linear: CMatrix::identity(order + 1, order + 1), order }
}

/// `J_a = J T_a C_{φ_a}` for real `a ∈ (-1, 1)`, with `T_a` multiplication by
/// `K_a/‖K_a‖`. The linear part is `conj(T_a C_{φ_a})`.
pub fn conjugation_ja(a: f64, order: usize) -> Result<ConjugationRep> {
    if !(a.abs() < 1.0) {
        return Err(LabError::domain(format!("J_a needs a real a in (-1, 1), got {a}")));
    }
    let phi = symbol_series(&SymbolSpec::automorphism(Complex::new(a, 0.0))?, order)?;
    let kernel_unit: Vec<Complex> =
        (0..=order).map(|m| Complex::new((1.0 - a * a).sqrt() * a.powi(m as i32), 0.0)).collect();
    let powers = symbol_powers(&phi);
    let n = order + 1;
    let mut linear = CMatrix::from_element(n, n, linalg::zero());
    for (j, col) in powers.iter().enumerate() {
        let image = crate::series::cauchy_truncated(&kernel_unit, col);
        for (i, v) in image.iter().enumerate() {
            linear[(i, j)] = v.conj();
        }
    }
    Ok(ConjugationRep { linear, order })
}

/// `U_θ* J U_θ` with `U_θ = C_{e^{iθ}z} = diag(e^{ikθ})`. Passing `U_θ` through
/// the conjugate-linear `J` conjugates its diagonal, giving
/// `A'[k, j] = A[k, j] e^{-i(k+j)θ}`.
pub fn rotated_conjugation(j: &ConjugationRep, theta: f64, order: usize) -> Result<ConjugationRep> {
    if j.order != order {
        return Err(LabError::usage("rotated_conjugation: order mismatch"));
    }
    let n = order + 1;
    let phase: Vec<Complex> = (0..n).map(|k| Complex::from_polar(1.0, -(k as f64) * theta)).collect();
    let linear = CMatrix::from_fn(n, n, |r, c| j.linear[(r, c)] * phase[r] * phase[c]);
    Ok(ConjugationRep { linear, order })
}

/// Conjugation attached to a fixed point `a`: `J_a` for real `a`, otherwise
/// `U_θ* J_{|a|} U_θ` with `θ = arg a`.
pub fn conjugation_for_point(a: Complex, order: usize) -> Result<ConjugationRep> {
    if a.im == 0.0 {
        return conjugation_ja(a.re, order);
    }
    let (r, theta) = a.to_polar();
    rotated_conjugation(&conjugation_ja(r, order)?, theta, order)
}

/// Frobenius norm of the leading `block × block` part of `A·conj(M) - Mᴴ·A`,
/// the coordinate form of `J C - C* J`.
pub fn csym_defect(m: &OperatorMatrix, j: &ConjugationRep, block: usize) -> Result<f64> {
    if m.order != j.order {
        return Err(LabError::usage("csym_defect: operator and conjugation orders differ"));
    }
    check_block(block, m.order)?;
    let a = &j.linear;
    let mm = &m.entries;
    let n = m.dim();
    let mut total = 0.0;
    for r in 0..block {
        for c in 0..block {
            let mut s = linalg::zero();
            for k in 0..n {
                s += a[(r, k)] * mm[(k, c)].conj() - mm[(k, r)].conj() * a[(k, c)];
            }
            total += s.norm_sqr();
        }
    }
    Ok(total.sqrt())
}

/// Frobenius norm of the leading block of `AM - MA`.
pub fn commute_defect(a: &OperatorMatrix, m: &OperatorMatrix, block: usize) -> Result<f64> {
    if a.order != m.order {
        return Err(LabError::usage("commute_defect: orders differ"));
    }
    check_block(block, m.order)?;
    let (x, y) = (&a.entries, &m.entries);
    let n = a.dim();
    let mut total = 0.0;
    for r in 0..block {
        for c in 0..block {
            let mut s = linalg::zero();
            for k in 0..n {
                s += x[(r, k)] * y[(k, c)] - y[(r, k)] * x[(k, c)];
            }
            total += s.norm_sqr();
        }
    }
    Ok(total.sqrt())
}

/// Basis change `e_n ↦ σ^n`: column `n` holds the coefficients of `sigmas[n]`;
/// columns past `sigmas.len()` are zero.
pub fn similarity_matrix(sigmas: &[TaylorSeries], order: usize) -> Result<OperatorMatrix> {
    if sigmas.len() > order + 1 {
        return Err(LabError::usage(format!("similarity_matrix: {} series exceed dimension {}", sigmas.len(), order + 1)));
    }
    let n = order + 1;
    let mut entries = CMatrix::from_element(n, n, linalg::zero());
    for (j, s) in sigmas.iter().enumerate() {
        let s = s.with_order(order);
        for (i, c) in s.coeffs().iter().enumerate() {
            entries[(i, j)] = *c;
        }
    }
    Ok(OperatorMatrix { entries, order })
}

/// `A = S D S⁻¹` on the leading `L × L` block (`L = sigmas.len()`), zero
/// elsewhere. `A σ^n = d_n σ^n`, so `A` commutes with `C_φ` on that block.
pub fn commutant_diag_operator(sigmas: &[TaylorSeries], diag: &[Complex], order: usize) -> Result<OperatorMatrix> {
    if sigmas.len() != diag.len() {
        return Err(LabError::usage(format!(
            "commutant_diag_operator: {} series but {} diagonal entries",
            sigmas.len(),
            diag.len()
        )));
    }
    let l = sigmas.len();
    if l == 0 || l > order + 1 {
        return Err(LabError::usage("commutant_diag_operator: block size out of range"));
    }
    let s = linalg::leading(similarity_matrix(sigmas, order)?.entries(), l);
    let (s_inv, cond) = linalg::inverse_with_condition(&s)?;
    if cond > CONDITION_LIMIT {
        return Err(LabError::IllConditioned(format!(
            "Koenigs similarity has condition number {cond:e} > {CONDITION_LIMIT:e}"
        )));
    }
    let d = CMatrix::from_diagonal(&CVector::from_column_slice(diag));
    let block = &s * d * s_inv;
    let n = order + 1;
    let mut entries = CMatrix::from_element(n, n, linalg::zero());
    entries.view_mut((0, 0), (l, l)).copy_from(&block);
    Ok(OperatorMatrix { entries, order })
}

/// Eigenpairs of the leading `block × block` part of `M` nearest to `targets`.
pub fn block_eigenpairs(
    m: &OperatorMatrix,
    block: usize,
    targets: &[Complex],
    min_sep: f64,
) -> Result<Vec<(Complex, CVector)>> {
    if block == 0 || block > m.dim() {
        return Err(LabError::usage("block_eigenpairs: block out of range"));
    }
    linalg::eigenpairs_near(&linalg::leading(&m.entries, block), targets, min_sep)
}
