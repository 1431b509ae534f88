//! Finite-order realization of composition operators on the Hardy space H²
//! of the unit disk.
//!
//! Functions are carried as truncated Taylor series ([`TaylorSeries`]),
//! operators as matrices in the monomial basis ([`OperatorMatrix`]), and
//! conjugate-linear conjugations by their linear part ([`ConjugationRep`]).
//! On top of that the crate computes Koenigs eigenfunctions of Schröder maps
//! by two independent routes, builds the conjugations `J`, `J_a` and their
//! rotations, and runs the complex-symmetry checks: conjugate-orthogonality
//! Gram matrices, completeness residuals, the kernel necessary condition
//! `|σ(0)| = |K_a'(a)| / (‖K_a‖ ‖K_a'‖)`, commutant and power checks.
//!
//! The [`exact`] module certifies the binomial and biorthogonality identities
//! in exact rational arithmetic.

pub mod battery;
pub mod cli;
pub mod csym;
pub mod error;
pub mod exact;
pub mod kernels;
pub mod koenigs;
mod linalg;
pub mod operators;
pub mod report;
pub mod series;

pub use error::{LabError, Result};
pub use kernels::{DiskPoint, FixedPoint, KernelClosedForms, SymbolSpec};
pub use koenigs::KoenigsResult;
pub use operators::{ConjugationRep, OperatorMatrix};
pub use series::{Complex, TaylorSeries};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 256;
