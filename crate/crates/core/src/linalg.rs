//! Dense complex helpers shared by the operator and symmetry modules.

use nalgebra::{DMatrix, DVector, Schur};

use crate::error::{LabError, Result};
use crate::series::Complex;

pub(crate) type CMatrix = DMatrix<Complex>;
pub(crate) type CVector = DVector<Complex>;

pub(crate) fn zero() -> Complex {
    Complex::new(0.0, 0.0)
}

/// Leading `block × block` submatrix.
pub(crate) fn leading(m: &CMatrix, block: usize) -> CMatrix {
    m.view((0, 0), (block, block)).into_owned()
}

pub(crate) fn is_upper_triangular(m: &CMatrix, tol: f64) -> bool {
    (0..m.ncols()).all(|j| ((j + 1)..m.nrows()).all(|i| m[(i, j)].norm() <= tol))
}

/// Matrix 1-norm (max column sum).
pub(crate) fn norm1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of a square matrix plus its 1-norm condition number.
///
/// Upper-triangular input is inverted by back substitution; anything else goes
/// through LU with partial pivoting.
pub(crate) fn inverse_with_condition(m: &CMatrix) -> Result<(CMatrix, f64)> {
    let n = m.nrows();
    let inv = if is_upper_triangular(m, 0.0) {
        if (0..n).any(|i| m[(i, i)].norm() == 0.0) {
            return Err(LabError::IllConditioned("triangular matrix has a zero pivot".into()));
        }
        let mut inv = CMatrix::identity(n, n);
        if !m.solve_upper_triangular_mut(&mut inv) {
            return Err(LabError::IllConditioned("triangular solve failed".into()));
        }
        inv
    } else {
        m.clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| LabError::IllConditioned("LU factorization is singular".into()))?
    };
    let cond = norm1(m) * norm1(&inv);
    if !cond.is_finite() {
        return Err(LabError::IllConditioned("condition number is not finite".into()));
    }
    Ok((inv, cond))
}

/// Eigenpairs of `m` whose eigenvalues lie nearest to each of `targets`.
///
/// Uses a complex Schur form `m = Q T Qᴴ` and back substitution on `T`. Each
/// selected eigenvalue must be separated from every other eigenvalue by at
/// least `min_sep`. Eigenvectors are returned with unit ℓ² norm.
pub(crate) fn eigenpairs_near(m: &CMatrix, targets: &[Complex], min_sep: f64) -> Result<Vec<(Complex, CVector)>> {
    let n = m.nrows();
    let (q, t) = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| LabError::IllConditioned("Schur iteration did not converge".into()))?
        .unpack();
    let diag: Vec<Complex> = (0..n).map(|i| t[(i, i)]).collect();

    let mut out = Vec::with_capacity(targets.len());
    for target in targets {
        let p = (0..n)
            .min_by(|&i, &j| (diag[i] - target).norm().total_cmp(&(diag[j] - target).norm()))
            .ok_or_else(|| LabError::usage("empty matrix"))?;
        let mu = diag[p];
        if let Some(sep) = (0..n).filter(|&i| i != p).map(|i| (diag[i] - mu).norm()).reduce(f64::min) {
            if sep < min_sep {
                return Err(LabError::IllConditioned(format!(
                    "eigenvalue {mu} is within {sep:e} of another eigenvalue (need {min_sep:e})"
                )));
            }
        }
        let mut y = CVector::from_element(n, zero());
        y[p] = Complex::new(1.0, 0.0);
        for i in (0..p).rev() {
            let s: Complex = ((i + 1)..=p).map(|l| t[(i, l)] * y[l]).sum();
            y[i] = -s / (diag[i] - mu);
        }
        let mut v = &q * y;
        let nv = v.norm();
        v /= Complex::new(nv, 0.0);
        out.push((mu, v));
    }
    Ok(out)
}

/// Orthonormal basis for the span of `vectors` by Gram–Schmidt with one full
/// reorthogonalization pass. Vectors whose remaining norm falls below `drop_tol`
/// (relative to their original norm) are skipped.
pub(crate) fn orthonormal_basis(vectors: &[CVector], drop_tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let original = v.norm();
        if original == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dotc(&w);
                w.axpy(-proj, q, Complex::new(1.0, 0.0));
            }
        }
        let nw = w.norm();
        if nw > drop_tol * original {
            w /= Complex::new(nw, 0.0);
            basis.push(w);
        }
    }
    basis
}

/// Norm of `v` minus its orthogonal projection onto the span of the orthonormal `basis`.
pub(crate) fn projection_residual(v: &CVector, basis: &[CVector]) -> f64 {
    let mut w = v.clone();
    for _ in 0..2 {
        for q in basis {
            let proj = q.dotc(&w);
            w.axpy(-proj, q, Complex::new(1.0, 0.0));
        }
    }
    w.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    #[test]
    fn eigenpairs_of_triangular_matrix() {
        let m = CMatrix::from_row_slice(3, 3, &[c(1.0), c(2.0), c(3.0), c(0.0), c(0.5), c(1.0), c(0.0), c(0.0), c(0.25)]);
        let pairs = eigenpairs_near(&m, &[c(0.5), c(0.25)], 1e-8).unwrap();
        for (mu, v) in pairs {
            let r = &m * &v - &v * mu;
            assert!(r.norm() < 1e-12, "residual {}", r.norm());
        }
    }

    #[test]
    fn clustered_eigenvalues_rejected() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(1.0 + 1e-12), c(0.5)]));
        assert!(matches!(eigenpairs_near(&m, &[c(1.0)], 1e-8), Err(LabError::IllConditioned(_))));
    }

    #[test]
    fn inverse_paths_agree() {
        let upper = CMatrix::from_row_slice(2, 2, &[c(2.0), c(1.0), c(0.0), c(4.0)]);
        let (inv, cond) = inverse_with_condition(&upper).unwrap();
        assert!((&upper * &inv - CMatrix::identity(2, 2)).norm() < 1e-15);
        assert!(cond >= 1.0);
        let full = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(1.0)]);
        let (inv, _) = inverse_with_condition(&full).unwrap();
        assert!((&full * &inv - CMatrix::identity(2, 2)).norm() < 1e-15);
        let singular = CMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(1.0), c(1.0)]);
        assert!(inverse_with_condition(&singular).is_err());
    }

    #[test]
    fn gram_schmidt_residuals() {
        let e = |k: usize| {
            let mut v = CVector::from_element(3, zero());
            v[k] = c(1.0);
            v
        };
        let basis = orthonormal_basis(&[e(0) + e(1), e(1), e(0)], 1e-12);
        assert_eq!(basis.len(), 2);
        assert!(projection_residual(&e(0), &basis) < 1e-15);
        assert!((projection_residual(&e(2), &basis) - 1.0).abs() < 1e-15);
    }
}
