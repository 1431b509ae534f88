//! Exact rational certificates for the binomial identities behind the
//! biorthogonality of `z^n K_a^{n+1}` and `(z - a)^m`.
//!
//! Square roots never appear: quantities such as `‖K_a‖^{-2n-1}` are certified
//! squared, and the floating side applies the root.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{LabError, Result};

pub type Rational = BigRational;

/// Parses `p/q` or an integer `p`. Decimals are rejected.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let parse_int = |s: &str| {
        s.trim()
            .parse::<BigInt>()
            .map_err(|_| LabError::usage(format!("'{text}' is not a rational of the form p/q")))
    };
    let (num, den) = match text.split_once('/') {
        Some((p, q)) => (parse_int(p)?, parse_int(q)?),
        None => (parse_int(text)?, BigInt::one()),
    };
    if den.is_zero() {
        return Err(LabError::usage(format!("'{text}' has a zero denominator")));
    }
    Ok(BigRational::new(num, den))
}

/// `p/q` with `q > 0`, always showing the denominator.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn check_in_disk(a: &Rational) -> Result<()> {
    if a.abs() >= BigRational::one() {
        return Err(LabError::domain(format!("|a| must be < 1, got {}", format_rational(a))));
    }
    Ok(())
}

/// Generalized binomial coefficient `r(r-1)...(r-j+1)/j!`, equal to 1 for `j = 0`.
pub fn binomial_general(r: i64, j: u32) -> Rational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..j as i64 {
        num *= BigInt::from(r) - BigInt::from(i);
        den *= BigInt::from(i + 1);
    }
    BigRational::new(num, den)
}

/// `Σ_{j=0}^{k} (-1)^j C(k, j)`, which vanishes for every `k ≥ 1`.
pub fn alternating_sum(k: u32) -> Result<Rational> {
    if k == 0 {
        return Err(LabError::usage("alternating_sum needs k >= 1"));
    }
    let mut total = BigRational::zero();
    for j in 0..=k {
        let term = binomial_general(k as i64, j);
        if j.is_even() {
            total += term;
        } else {
            total -= term;
        }
    }
    Ok(total)
}

/// Polynomial with exact rational coefficients; trailing zeros are trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPolynomial {
    coeffs: Vec<Rational>,
}

impl ExactPolynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// `(z - a)^m` expanded exactly.
pub fn shifted_power(a: &Rational, m: u32) -> ExactPolynomial {
    let minus_a = -a.clone();
    let coeffs = (0..=m)
        .map(|i| binomial_general(m as i64, i) * pow(&minus_a, m - i))
        .collect();
    ExactPolynomial::new(coeffs)
}

fn pow(x: &Rational, e: u32) -> Rational {
    num_traits::pow(x.clone(), e as usize)
}

/// Exact `⟨z^n K_a^{n+1}, (z - a)^m⟩` for real rational `a`, `|a| < 1`.
///
/// The coefficient of `z^{n+j}` in `z^n K_a^{n+1}` is `C(-n-1, j)(-a)^j`; since
/// `(z - a)^m` has degree `m`, only indices `n..=m` contribute and the sum is
/// finite. For `m < n` the result is zero without arithmetic.
pub fn exact_biorth(a: &Rational, n: u32, m: u32) -> Result<Rational> {
    check_in_disk(a)?;
    if m < n {
        return Ok(BigRational::zero());
    }
    let target = shifted_power(a, m);
    let minus_a = -a.clone();
    let mut total = BigRational::zero();
    for i in n..=m {
        let j = i - n;
        let kernel_coeff = binomial_general(-(n as i64) - 1, j) * pow(&minus_a, j);
        total += kernel_coeff * target.coeff(i as usize);
    }
    Ok(total)
}

/// Returns true iff `[a/(1-a²)²]² ≠ [a(1+a²)^{1/2}/(1-a²)²]²`, i.e. iff the
/// kernel necessary condition fails for `σ = φ_a`; expected for every `a ∈ (0,1)`.
pub fn eq13_contradiction_exact(a: &Rational) -> Result<bool> {
    if !(a.is_positive() && a < &BigRational::one()) {
        return Err(LabError::domain(format!("need 0 < a < 1, got {}", format_rational(a))));
    }
    let a2 = a * a;
    let q = BigRational::one() - &a2;
    let q4 = pow(&q, 4);
    let lhs_sq = &a2 / &q4;
    let rhs_sq = &a2 * (BigRational::one() + &a2) / &q4;
    Ok(lhs_sq != rhs_sq)
}

/// `J_a (z - a)^n = sign · s · z^n K_a^{n+1}` with `s² = scalar_squared`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactJaImage {
    /// `(-1)^n`
    pub sign: i32,
    /// `z^n K_a^{n+1}` truncated at the requested degree.
    pub poly: ExactPolynomial,
    /// `(1 - a²)^{2n+1} = ‖K_a‖^{-2(2n+1)}`
    pub scalar_squared: Rational,
}

pub fn exact_ja_image(a: &Rational, n: u32, degree: u32) -> Result<ExactJaImage> {
    check_in_disk(a)?;
    if degree < n {
        return Err(LabError::usage(format!("exact_ja_image: degree {degree} < n = {n}")));
    }
    let mut coeffs = vec![BigRational::zero(); degree as usize + 1];
    for j in 0..=(degree - n) {
        coeffs[(n + j) as usize] = binomial_general((n + j) as i64, j) * pow(a, j);
    }
    let q = BigRational::one() - a * a;
    Ok(ExactJaImage {
        sign: if n.is_even() { 1 } else { -1 },
        poly: ExactPolynomial::new(coeffs),
        scalar_squared: pow(&q, 2 * n + 1),
    })
}

/// Audit lines `BIORTH a=p/q n=N m=M value=r/s PASS|FAIL` for `0 <= n, m <= max`,
/// plus whether every line passed.
pub fn biorth_certificate(a: &Rational, max: u32) -> Result<(String, bool)> {
    let mut out = String::new();
    let mut all = true;
    for n in 0..=max {
        for m in 0..=max {
            let v = exact_biorth(a, n, m)?;
            let want = if n == m { BigRational::one() } else { BigRational::zero() };
            let ok = v == want;
            all &= ok;
            let _ = writeln!(
                out,
                "BIORTH a={} n={n} m={m} value={} {}",
                format_rational(a),
                format_rational(&v),
                if ok { "PASS" } else { "FAIL" }
            );
        }
    }
    Ok((out, all))
}
