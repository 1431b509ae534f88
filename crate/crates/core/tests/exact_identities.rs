use koenigs_lab::exact::{self, parse_rational, Rational};
use koenigs_lab::kernels::kernel_series;
use koenigs_lab::operators::conjugation_ja;
use koenigs_lab::{Complex, DiskPoint, TaylorSeries};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

fn q(p: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(d))
}

#[test]
fn biorthogonality_is_exact() {
    for a in [q(1, 2), q(1, 3), q(3, 5), q(-2, 5)] {
        for n in 0..=12 {
            for m in 0..=12 {
                let v = exact::exact_biorth(&a, n, m).unwrap();
                let want = if n == m { Rational::one() } else { Rational::zero() };
                assert_eq!(v, want, "a = {a}, n = {n}, m = {m}");
            }
        }
    }
}

#[test]
fn negated_binomials() {
    for n in 0..=32i64 {
        for j in 0..=32u32 {
            let sign = if j % 2 == 0 { Rational::one() } else { -Rational::one() };
            assert_eq!(exact::binomial_general(-n - 1, j), sign * exact::binomial_general(n + j as i64, j));
        }
    }
}

#[test]
fn alternating_sums_vanish_up_to_64() {
    for k in 1..=64 {
        assert!(exact::alternating_sum(k).unwrap().is_zero(), "k = {k}");
    }
}

#[test]
fn kernel_condition_fails_exactly() {
    for (p, d) in [(1, 2), (1, 10), (9, 10), (1, 1000)] {
        assert!(exact::eq13_contradiction_exact(&q(p, d)).unwrap());
    }
}

#[test]
fn certificate_lines() {
    let (text, ok) = exact::biorth_certificate(&q(3, 5), 12).unwrap();
    assert!(ok);
    assert_eq!(text.lines().count(), 169);
    assert!(text.lines().all(|l| l.starts_with("BIORTH a=3/5 ") && l.ends_with(" PASS")));
    assert!(text.contains("BIORTH a=3/5 n=4 m=4 value=1/1 PASS"));
    assert!(text.contains("BIORTH a=3/5 n=4 m=7 value=0/1 PASS"));
}

fn float_image_error(p: i64, d: i64, n: u32, order: usize) -> f64 {
    let a = p as f64 / d as f64;
    let img = exact::exact_ja_image(&q(p, d), n, order as u32).unwrap();
    let scale = img.sign as f64 * img.scalar_squared.to_f64().unwrap().sqrt();
    let want: Vec<Complex> = img.poly.to_f64().into_iter().map(|x| Complex::new(x * scale, 0.0)).collect();
    let want = TaylorSeries::from_coeffs(&want, order).unwrap();
    let f = TaylorSeries::from_real(&[-a, 1.0], order).unwrap().pow(n as usize);
    conjugation_ja(a, order).unwrap().apply(&f).unwrap().max_abs_diff(&want, order + 1)
}

#[test]
fn exact_image_matches_floating_conjugation() {
    for n in 0..=10 {
        let err = float_image_error(1, 2, n, 256);
        assert!(err < 1e-12, "n = {n}: {err}");
    }
}

#[test]
fn exact_image_squared_scalar_matches_kernel_norm() {
    let a = DiskPoint::real(0.5).unwrap();
    let norm_k = kernel_series(a, 0, 256).unwrap().norm();
    for n in 0..=10u32 {
        let img = exact::exact_ja_image(&q(1, 2), n, n).unwrap();
        let floating = norm_k.powi(-2 * (2 * n as i32 + 1));
        assert!((img.scalar_squared.to_f64().unwrap() - floating).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn biorthogonality_for_random_rationals(d in 2i64..30, p in -29i64..30, n in 0u32..7, m in 0u32..7) {
        prop_assume!(p.abs() < d);
        let v = exact::exact_biorth(&q(p, d), n, m).unwrap();
        prop_assert_eq!(v, if n == m { Rational::one() } else { Rational::zero() });
    }

    #[test]
    fn rationals_round_trip(p in -1000i64..1000, d in 1i64..1000) {
        let r = q(p, d);
        prop_assert_eq!(parse_rational(&exact::format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn floating_image_agrees_for_small_points(d in 3i64..12, p in -5i64..6, n in 0u32..6) {
        prop_assume!(2 * p.abs() <= d);
        prop_assert!(float_image_error(p, d, n, 160) < 1e-12);
    }
}
