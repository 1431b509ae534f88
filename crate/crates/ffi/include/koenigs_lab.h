#ifndef KOENIGS_LAB_H
#define KOENIGS_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `KL_STATUS_OK` is zero; everything else is a failure.
typedef enum KlStatus {
  KL_STATUS_OK = 0,
  KL_STATUS_USAGE = 1,
  KL_STATUS_DOMAIN = 2,
  KL_STATUS_CONVERGENCE = 3,
  KL_STATUS_ILL_CONDITIONED = 4,
  KL_STATUS_IO = 5,
  KL_STATUS_NULL_POINTER = 6,
  KL_STATUS_INVALID_UTF8 = 7,
  KL_STATUS_PANIC = 8,
} KlStatus;

typedef enum KlVerdict {
  KL_VERDICT_CONSISTENT = 0,
  KL_VERDICT_NOT_COMPLEX_SYMMETRIC = 1,
} KlVerdict;

// Conjugation, stored by its linear part.
typedef struct KlConjugation KlConjugation;

// Truncated operator matrix.
typedef struct KlMatrix KlMatrix;

// Truncated power series.
typedef struct KlSeries KlSeries;

// Self-map of the disk.
typedef struct KlSymbol KlSymbol;

typedef struct KlComplex {
  double re;
  double im;
} KlComplex;

// Outcome of the kernel necessary condition for complex symmetry.
typedef struct KlCsymVerdict {
  double lhs;
  double rhs;
  double gap;
  enum KlVerdict verdict;
  // `|a|` after rotating the fixed point onto the real axis.
  double reduced_point;
  double theta;
  struct KlComplex multiplier;
} KlCsymVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *kl_last_error_message(void);

// Parses a symbol such as `bpair:0.5,0,0.3,0` or `affine:0.5,0,0.25,0`.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum KlStatus kl_symbol_parse(const char *text, struct KlSymbol **out);

// # Safety
// `s` must be NULL or a handle from this library, not yet freed.
void kl_symbol_free(struct KlSymbol *s);

// Taylor coefficients of the symbol truncated at `order`.
//
// # Safety
// `s` must be a live handle; `out` must be writable.
enum KlStatus kl_symbol_series(const struct KlSymbol *s, size_t order, struct KlSeries **out);

// Series with coefficients `coeffs[0..len]`, truncation order `len - 1`.
//
// # Safety
// `coeffs` must point to `len` readable values; `out` must be writable.
enum KlStatus kl_series_new(const struct KlComplex *coeffs, size_t len, struct KlSeries **out);

// # Safety
// `s` must be NULL or a handle from this library, not yet freed.
void kl_series_free(struct KlSeries *s);

// Number of stored coefficients (order + 1), or 0 for NULL.
//
// # Safety
// `s` must be NULL or a live handle.
size_t kl_series_len(const struct KlSeries *s);

// Copies the coefficients into `buf`, which must hold `kl_series_len(s)` values.
//
// # Safety
// `s` must be a live handle; `buf` must have room for `cap` values.
enum KlStatus kl_series_coeffs(const struct KlSeries *s, struct KlComplex *buf, size_t cap);

// `⟨f, g⟩ = Σ f_k conj(g_k)`; both series must share an order.
//
// # Safety
// `f` and `g` must be live handles; `out` must be writable.
enum KlStatus kl_series_inner_product(const struct KlSeries *f,
                                      const struct KlSeries *g,
                                      struct KlComplex *out);

// # Safety
// `f` must be a live handle; `out` must be writable.
enum KlStatus kl_series_norm(const struct KlSeries *f, double *out);

// Reproducing kernel for `f ↦ f^(n)(a)`, truncated at `order`.
//
// # Safety
// `out` must be writable.
enum KlStatus kl_kernel_series(struct KlComplex a, size_t n, size_t order, struct KlSeries **out);

// Koenigs eigenfunction by the fixed-point iteration. `residual` may be NULL.
//
// # Safety
// `s` must be a live handle; `out` must be writable; `residual` NULL or writable.
enum KlStatus kl_koenigs_iterate(const struct KlSymbol *s,
                                 size_t order,
                                 double tol,
                                 size_t max_iter,
                                 struct KlSeries **out,
                                 double *residual);

// Koenigs eigenfunction by the recentered triangular recurrence. `residual` may be NULL.
//
// # Safety
// `s` must be a live handle; `out` must be writable; `residual` NULL or writable.
enum KlStatus kl_koenigs_recurrence(const struct KlSymbol *s,
                                    size_t order,
                                    struct KlSeries **out,
                                    double *residual);

// Kernel necessary condition for complex symmetry of `C_φ`.
//
// # Safety
// `s` must be a live handle; `out` must be writable.
enum KlStatus kl_kernel_condition_test(const struct KlSymbol *s,
                                       size_t order,
                                       double tol_decision,
                                       struct KlCsymVerdict *out);

// `f ↦ conj(f(conj z))`.
//
// # Safety
// `out` must be writable.
enum KlStatus kl_conjugation_basic(size_t order, struct KlConjugation **out);

// `J_a` for real `a` in (-1, 1).
//
// # Safety
// `out` must be writable.
enum KlStatus kl_conjugation_ja(double a, size_t order, struct KlConjugation **out);

// `R_θ J R_θ*` for the rotation `R_θ f = f(e^{-iθ} z)`.
//
// # Safety
// `j` must be a live handle; `out` must be writable.
enum KlStatus kl_conjugation_rotated(const struct KlConjugation *j,
                                     double theta,
                                     size_t order,
                                     struct KlConjugation **out);

// # Safety
// `j` and `f` must be live handles; `out` must be writable.
enum KlStatus kl_conjugation_apply(const struct KlConjugation *j,
                                   const struct KlSeries *f,
                                   struct KlSeries **out);

// # Safety
// `j` must be NULL or a handle from this library, not yet freed.
void kl_conjugation_free(struct KlConjugation *j);

// Matrix of `C_φ`; column `j` holds the coefficients of `φ^j`.
//
// # Safety
// `s` must be a live handle; `out` must be writable.
enum KlStatus kl_composition_matrix(const struct KlSymbol *s, size_t order, struct KlMatrix **out);

// # Safety
// `m` and `f` must be live handles; `out` must be writable.
enum KlStatus kl_matrix_apply(const struct KlMatrix *m,
                              const struct KlSeries *f,
                              struct KlSeries **out);

// # Safety
// `m` must be NULL or a handle from this library, not yet freed.
void kl_matrix_free(struct KlMatrix *m);

// Largest entry of `J M J - M*` on the leading `block × block` corner.
//
// # Safety
// `m` and `j` must be live handles; `out` must be writable.
enum KlStatus kl_csym_defect(const struct KlMatrix *m,
                             const struct KlConjugation *j,
                             size_t block,
                             double *out);

// Exact rational check that `⟨J_a (z-a)^n, (z-a)^m⟩` equals `δ_{nm}`;
// `a` is a rational such as `3/5`.
//
// # Safety
// `a` must be a NUL-terminated string; `out` must be writable.
enum KlStatus kl_exact_biorth_is_delta(const char *a, uint32_t n, uint32_t m, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KOENIGS_LAB_H */
