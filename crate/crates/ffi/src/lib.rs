//! C ABI over `koenigs_lab`.
//!
//! Every object crosses the boundary as an opaque heap handle owned by the
//! caller and released with the matching `*_free`. Fallible calls return a
//! [`KlStatus`]; on failure [`kl_last_error_message`] describes the cause.
//! Out-parameters are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use koenigs_lab::exact::{exact_biorth, parse_rational};
use koenigs_lab::{cli, csym, kernels, koenigs, operators};
use koenigs_lab::{Complex, DiskPoint, LabError, SymbolSpec, TaylorSeries};

/// Result codes. `KL_STATUS_OK` is zero; everything else is a failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlStatus {
    Ok = 0,
    Usage = 1,
    Domain = 2,
    Convergence = 3,
    IllConditioned = 4,
    Io = 5,
    NullPointer = 6,
    InvalidUtf8 = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KlComplex {
    pub re: f64,
    pub im: f64,
}

impl From<KlComplex> for Complex {
    fn from(c: KlComplex) -> Self {
        Complex::new(c.re, c.im)
    }
}

impl From<Complex> for KlComplex {
    fn from(c: Complex) -> Self {
        KlComplex { re: c.re, im: c.im }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlVerdict {
    Consistent = 0,
    NotComplexSymmetric = 1,
}

/// Outcome of the kernel necessary condition for complex symmetry.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlCsymVerdict {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub verdict: KlVerdict,
    /// `|a|` after rotating the fixed point onto the real axis.
    pub reduced_point: f64,
    pub theta: f64,
    pub multiplier: KlComplex,
}

/// Truncated power series.
pub struct KlSeries(TaylorSeries);

/// Self-map of the disk.
pub struct KlSymbol(SymbolSpec);

/// Conjugation, stored by its linear part.
pub struct KlConjugation(operators::ConjugationRep);

/// Truncated operator matrix.
pub struct KlMatrix(operators::OperatorMatrix);

enum Failure {
    Lab(LabError),
    Null(&'static str),
    Utf8,
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Lab(e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(f: Failure) -> KlStatus {
    let (status, msg) = match f {
        Failure::Lab(e) => {
            let status = match &e {
                LabError::Usage(_) => KlStatus::Usage,
                LabError::Domain(_) => KlStatus::Domain,
                LabError::Convergence { .. } => KlStatus::Convergence,
                LabError::IllConditioned(_) => KlStatus::IllConditioned,
                LabError::Io(_) => KlStatus::Io,
            };
            (status, e.to_string())
        }
        Failure::Null(what) => (KlStatus::NullPointer, format!("null pointer: {what}")),
        Failure::Utf8 => (KlStatus::InvalidUtf8, "string argument is not valid UTF-8".to_string()),
    };
    set_last_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KlStatus::Ok,
        Ok(Err(e)) => status_of(e),
        Err(_) => {
            set_last_error("internal panic".to_string());
            KlStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8)
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a symbol such as `bpair:0.5,0,0.3,0` or `affine:0.5,0,0.25,0`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_symbol_parse(text: *const c_char, out: *mut *mut KlSymbol) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let s = cli::parse_symbol(string(text, "text")?)?;
        *out = boxed(KlSymbol(s));
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kl_symbol_free(s: *mut KlSymbol) {
    free(s)
}

/// Taylor coefficients of the symbol truncated at `order`.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_symbol_series(s: *const KlSymbol, order: usize, out: *mut *mut KlSeries) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let series = kernels::symbol_series(&borrow(s, "symbol")?.0, order)?;
        *out = boxed(KlSeries(series));
        Ok(())
    })
}

/// Series with coefficients `coeffs[0..len]`, truncation order `len - 1`.
///
/// # Safety
/// `coeffs` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_series_new(coeffs: *const KlComplex, len: usize, out: *mut *mut KlSeries) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if coeffs.is_null() {
            return Err(Failure::Null("coeffs"));
        }
        let c: Vec<Complex> = std::slice::from_raw_parts(coeffs, len).iter().map(|&z| z.into()).collect();
        *out = boxed(KlSeries(TaylorSeries::new(c)?));
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kl_series_free(s: *mut KlSeries) {
    free(s)
}

/// Number of stored coefficients (order + 1), or 0 for NULL.
///
/// # Safety
/// `s` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kl_series_len(s: *const KlSeries) -> usize {
    s.as_ref().map_or(0, |s| s.0.coeffs().len())
}

/// Copies the coefficients into `buf`, which must hold `kl_series_len(s)` values.
///
/// # Safety
/// `s` must be a live handle; `buf` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn kl_series_coeffs(s: *const KlSeries, buf: *mut KlComplex, cap: usize) -> KlStatus {
    guard(|| {
        let c = borrow(s, "series")?.0.coeffs();
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        if cap < c.len() {
            return Err(LabError::Usage(format!("buffer holds {cap} values, series has {}", c.len())).into());
        }
        let dst = std::slice::from_raw_parts_mut(buf, c.len());
        for (d, &z) in dst.iter_mut().zip(c) {
            *d = z.into();
        }
        Ok(())
    })
}

/// `⟨f, g⟩ = Σ f_k conj(g_k)`; both series must share an order.
///
/// # Safety
/// `f` and `g` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_series_inner_product(f: *const KlSeries, g: *const KlSeries, out: *mut KlComplex) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = borrow(f, "f")?.0.inner_product(&borrow(g, "g")?.0)?.into();
        Ok(())
    })
}

/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_series_norm(f: *const KlSeries, out: *mut f64) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = borrow(f, "f")?.0.norm();
        Ok(())
    })
}

/// Reproducing kernel for `f ↦ f^(n)(a)`, truncated at `order`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_kernel_series(a: KlComplex, n: usize, order: usize, out: *mut *mut KlSeries) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let k = kernels::kernel_series(DiskPoint::new(a.into())?, n, order)?;
        *out = boxed(KlSeries(k));
        Ok(())
    })
}

/// Koenigs eigenfunction by the fixed-point iteration. `residual` may be NULL.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable; `residual` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn kl_koenigs_iterate(
    s: *const KlSymbol,
    order: usize,
    tol: f64,
    max_iter: usize,
    out: *mut *mut KlSeries,
    residual: *mut f64,
) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let r = koenigs::koenigs_iterate(&borrow(s, "symbol")?.0, order, tol, max_iter)?;
        if let Some(res) = residual.as_mut() {
            *res = r.residual;
        }
        *out = boxed(KlSeries(r.sigma));
        Ok(())
    })
}

/// Koenigs eigenfunction by the recentered triangular recurrence. `residual` may be NULL.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable; `residual` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn kl_koenigs_recurrence(
    s: *const KlSymbol,
    order: usize,
    out: *mut *mut KlSeries,
    residual: *mut f64,
) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let r = koenigs::koenigs_recurrence(&borrow(s, "symbol")?.0, order)?;
        if let Some(res) = residual.as_mut() {
            *res = r.residual;
        }
        *out = boxed(KlSeries(r.sigma));
        Ok(())
    })
}

/// Kernel necessary condition for complex symmetry of `C_φ`.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_kernel_condition_test(s: *const KlSymbol, order: usize, tol_decision: f64, out: *mut KlCsymVerdict) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let v = csym::eq13_test(&borrow(s, "symbol")?.0, order, tol_decision)?;
        *out = KlCsymVerdict {
            lhs: v.lhs,
            rhs: v.rhs,
            gap: v.gap,
            verdict: match v.verdict {
                csym::Verdict::Consistent => KlVerdict::Consistent,
                csym::Verdict::NotComplexSymmetric => KlVerdict::NotComplexSymmetric,
            },
            reduced_point: v.reduced_point,
            theta: v.theta,
            multiplier: v.multiplier.into(),
        };
        Ok(())
    })
}

/// `f ↦ conj(f(conj z))`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_conjugation_basic(order: usize, out: *mut *mut KlConjugation) -> KlStatus {
    guard(|| {
        *out_ptr(out, "out")? = boxed(KlConjugation(operators::conjugation_basic(order)));
        Ok(())
    })
}

/// `J_a` for real `a` in (-1, 1).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_conjugation_ja(a: f64, order: usize, out: *mut *mut KlConjugation) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(KlConjugation(operators::conjugation_ja(a, order)?));
        Ok(())
    })
}

/// `R_θ J R_θ*` for the rotation `R_θ f = f(e^{-iθ} z)`.
///
/// # Safety
/// `j` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_conjugation_rotated(
    j: *const KlConjugation,
    theta: f64,
    order: usize,
    out: *mut *mut KlConjugation,
) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let r = operators::rotated_conjugation(&borrow(j, "conjugation")?.0, theta, order)?;
        *out = boxed(KlConjugation(r));
        Ok(())
    })
}

/// # Safety
/// `j` and `f` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_conjugation_apply(j: *const KlConjugation, f: *const KlSeries, out: *mut *mut KlSeries) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = borrow(j, "conjugation")?.0.apply(&borrow(f, "f")?.0)?;
        *out = boxed(KlSeries(g));
        Ok(())
    })
}

/// # Safety
/// `j` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kl_conjugation_free(j: *mut KlConjugation) {
    free(j)
}

/// Matrix of `C_φ`; column `j` holds the coefficients of `φ^j`.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_composition_matrix(s: *const KlSymbol, order: usize, out: *mut *mut KlMatrix) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = operators::composition_matrix(&borrow(s, "symbol")?.0, order)?;
        *out = boxed(KlMatrix(m));
        Ok(())
    })
}

/// # Safety
/// `m` and `f` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_matrix_apply(m: *const KlMatrix, f: *const KlSeries, out: *mut *mut KlSeries) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = borrow(m, "matrix")?.0.apply(&borrow(f, "f")?.0)?;
        *out = boxed(KlSeries(g));
        Ok(())
    })
}

/// # Safety
/// `m` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kl_matrix_free(m: *mut KlMatrix) {
    free(m)
}

/// Largest entry of `J M J - M*` on the leading `block × block` corner.
///
/// # Safety
/// `m` and `j` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_csym_defect(m: *const KlMatrix, j: *const KlConjugation, block: usize, out: *mut f64) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = operators::csym_defect(&borrow(m, "matrix")?.0, &borrow(j, "conjugation")?.0, block)?;
        Ok(())
    })
}

/// Exact rational check that `⟨J_a (z-a)^n, (z-a)^m⟩` equals `δ_{nm}`;
/// `a` is a rational such as `3/5`.
///
/// # Safety
/// `a` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kl_exact_biorth_is_delta(a: *const c_char, n: u32, m: u32, out: *mut bool) -> KlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let a = parse_rational(string(a, "a")?)?;
        let v = exact_biorth(&a, n, m)?;
        let want: u8 = (n == m).into();
        *out = v == koenigs_lab::exact::Rational::from_integer(want.into());
        Ok(())
    })
}
