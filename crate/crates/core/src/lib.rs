//! Reproduction numbers and spectral analysis for nonnegative linear models.
//!
//! A population or epidemic model `x_{t+1} = A x_t` with nonnegative `A` is
//! split as `A = T + F` into transitions (survival, aging, recovery) and
//! fertility (births, new infections). When the transition part is
//! subcritical, `r(T) < 1`, the next-generation operator `F (I - T)^{-1}`
//! is well defined and its spectral radius `R0` sits on the same side of 1
//! as the growth rate `r(A)`:
//!
//! * `R0 >= r(A) > 1` (supercritical),
//! * `R0 = r(A) = 1` (critical), or
//! * `R0 <= r(A) < 1` (subcritical),
//!
//! with strict inequalities off the boundary when `A` is irreducible, `T` is
//! nonzero, and `R0 > 0`. This crate computes both quantities with certified
//! iterations, classifies systems into the three cases, audits the supporting
//! monotonicity/convexity structure of `lambda -> r(F (lambda I - T)^{-1})`,
//! and exercises everything over seeded random instances.
//!
//! Module map:
//!
//! * [`model`] — validated nonnegative matrices, splittings, tolerances.
//! * [`spectral`] — spectral radii (power iteration, Gelfand, char-poly oracle).
//! * [`ngm`] — resolvents, next-generation operators, `R0`, radius curves.
//! * [`trichotomy`] — classification and strictness certification.
//! * [`structure`] — irreducibility, positivity, Perron pairs.
//! * [`leslie`] — age-structured (Leslie) models and their truncations.
//! * [`dynamics`] — trajectory iteration and empirical growth rates.
//! * [`harness`] — seeded generators and the cross-validation battery.

pub mod dynamics;
pub mod harness;
pub mod leslie;
pub mod linalg;
pub mod model;
pub mod ngm;
pub mod spectral;
pub mod structure;
pub mod trichotomy;

pub use model::{ModelError, NonNegMatrix, SplitSystem, Tolerances};
pub use ngm::{r0, NgmError};
pub use spectral::{eig_oracle, gelfand_estimate, spectral_radius, SpectralMethod, SpectralResult};
pub use trichotomy::{classify, classify_strict, TrichotomyCase, TrichotomyVerdict};
