//! Classification of splittings by the position of `R0` and `r(A)` around 1.
//!
//! For any admissible splitting the two quantities sit on the same side of
//! 1: either `R0 >= r(A) > 1`, or `R0 = r(A) = 1`, or `R0 <= r(A) < 1`.
//! [`classify`] assigns the case and enforces the paired inequality at
//! tolerance. When the combined matrix is irreducible, the transition part
//! is nonzero, and `R0 > 0`, the non-critical inequalities are strict;
//! [`classify_strict`] certifies that sharpened form or reports exactly
//! which precondition failed.

use crate::model::{SplitSystem, Tolerances};
use crate::ngm::{self, NgmError};
use crate::spectral::{self, SpectralError};
use crate::structure;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrichotomyCase {
    /// `R0 >= r(A) > 1`: the population grows.
    Supercritical,
    /// `R0 = r(A) = 1`.
    Critical,
    /// `R0 <= r(A) < 1`: the population decays.
    Subcritical,
}

impl TrichotomyCase {
    /// Conventional short label: supercritical "a", critical "b",
    /// subcritical "c".
    pub fn label(self) -> &'static str {
        match self {
            TrichotomyCase::Supercritical => "a",
            TrichotomyCase::Critical => "b",
            TrichotomyCase::Subcritical => "c",
        }
    }
}

impl fmt::Display for TrichotomyCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrichotomyCase::Supercritical => write!(f, "supercritical"),
            TrichotomyCase::Critical => write!(f, "critical"),
            TrichotomyCase::Subcritical => write!(f, "subcritical"),
        }
    }
}

/// Outcome of a classification.
#[derive(Clone, Debug, PartialEq)]
pub struct TrichotomyVerdict {
    pub case: TrichotomyCase,
    pub r0: f64,
    pub radius_a: f64,
    /// Set only by [`classify_strict`] when the strict inequalities are
    /// certified with a gap above `tol_eq`.
    pub strict: bool,
    /// `|R0 - 1|`.
    pub r0_margin: f64,
    /// `|r(A) - 1|`.
    pub radius_margin: f64,
    /// Either quantity within `100 * tol_eq` of 1: verdicts this close to
    /// the threshold deserve a second look at tighter tolerances.
    pub near_boundary: bool,
}

/// Structural precondition for strictness that did not hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrictBlocker {
    Reducible,
    ZeroTransition,
    ZeroReproduction,
}

impl fmt::Display for StrictBlocker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrictBlocker::Reducible => write!(f, "combined matrix is reducible"),
            StrictBlocker::ZeroTransition => write!(f, "transition part is zero"),
            StrictBlocker::ZeroReproduction => write!(f, "R0 is zero at tolerance"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrichotomyError {
    /// `R0` and `r(A)` landed on opposite sides of 1 beyond every
    /// tolerance; with validated inputs this indicates a numerical defect.
    TheoremViolation { details: String },
    /// Both quantities hug 1 but disagree just beyond `tol_eq`; the case
    /// cannot be assigned honestly at this tolerance.
    AmbiguousBoundary { r0: f64, radius_a: f64 },
    /// Unit-radius renormalization is undefined for `R0 = 0`.
    R0Zero { r0: f64 },
    /// Strictness preconditions failed; the plain verdict is still
    /// attached.
    PreconditionUnmet { blockers: Vec<StrictBlocker>, verdict: Box<TrichotomyVerdict> },
    Ngm(NgmError),
}

impl fmt::Display for TrichotomyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrichotomyError::TheoremViolation { details } => {
                write!(f, "trichotomy inequality failed: {details}")
            }
            TrichotomyError::AmbiguousBoundary { r0, radius_a } => write!(
                f,
                "boundary case ambiguous at tolerance: R0 = {r0}, r(A) = {radius_a}"
            ),
            TrichotomyError::R0Zero { r0 } => {
                write!(f, "R0 = {r0} is zero at tolerance; no unit-radius normalization")
            }
            TrichotomyError::PreconditionUnmet { blockers, verdict } => {
                write!(f, "strictness preconditions unmet (case {}): ", verdict.case.label())?;
                for (i, b) in blockers.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{b}")?;
                }
                Ok(())
            }
            TrichotomyError::Ngm(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for TrichotomyError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            TrichotomyError::Ngm(e) => Some(e),
            _ => None,
        }
    }
}

impl From<NgmError> for TrichotomyError {
    fn from(e: NgmError) -> Self {
        TrichotomyError::Ngm(e)
    }
}

impl From<SpectralError> for TrichotomyError {
    fn from(e: SpectralError) -> Self {
        TrichotomyError::Ngm(NgmError::Spectral(e))
    }
}

fn quantities(sys: &SplitSystem, tol: &Tolerances) -> Result<(f64, f64), TrichotomyError> {
    let r0 = ngm::r0(sys, tol)?.radius;
    let radius_a = spectral::spectral_radius(sys.combined(), tol)?.radius;
    Ok((r0, radius_a))
}

/// Assigns the trichotomy case from `R0` and `r(A)` and checks the paired
/// inequality at `tol_eq`. Inequality failures inside `3 * tol_eq` of the
/// boundary are reported as [`TrichotomyError::AmbiguousBoundary`] rather
/// than as violations.
pub fn classify(sys: &SplitSystem, tol: &Tolerances) -> Result<TrichotomyVerdict, TrichotomyError> {
    let (r0, radius_a) = quantities(sys, tol)?;
    let eq = tol.tol_eq;
    let r0_margin = (r0 - 1.0).abs();
    let radius_margin = (radius_a - 1.0).abs();
    let near_boundary = r0_margin <= 100.0 * eq || radius_margin <= 100.0 * eq;
    let verdict = |case| TrichotomyVerdict {
        case,
        r0,
        radius_a,
        strict: false,
        r0_margin,
        radius_margin,
        near_boundary,
    };
    let ambiguous_or_violation = |relation: &str| {
        if r0_margin <= 3.0 * eq && radius_margin <= 3.0 * eq {
            TrichotomyError::AmbiguousBoundary { r0, radius_a }
        } else {
            TrichotomyError::TheoremViolation {
                details: format!("expected {relation}, got R0 = {r0}, r(A) = {radius_a}"),
            }
        }
    };
    if r0_margin <= eq && radius_margin <= eq {
        return Ok(verdict(TrichotomyCase::Critical));
    }
    if radius_a > 1.0 + eq {
        if r0 >= radius_a - eq {
            return Ok(verdict(TrichotomyCase::Supercritical));
        }
        return Err(ambiguous_or_violation("R0 >= r(A) > 1"));
    }
    if radius_a < 1.0 - eq {
        if r0 <= radius_a + eq {
            return Ok(verdict(TrichotomyCase::Subcritical));
        }
        return Err(ambiguous_or_violation("R0 <= r(A) < 1"));
    }
    // r(A) pinned at 1 while R0 is not.
    Err(ambiguous_or_violation("R0 = 1 whenever r(A) = 1"))
}

/// Computes `r(T + F / R0)`, which equals 1 for every splitting with
/// `R0 > 0`. Callers compare the return value against 1 at their own
/// tolerance.
pub fn verify_unit_radius(sys: &SplitSystem, tol: &Tolerances) -> Result<f64, TrichotomyError> {
    let r0 = ngm::r0(sys, tol)?.radius;
    if r0 <= tol.tol_eq {
        return Err(TrichotomyError::R0Zero { r0 });
    }
    let renormalized = sys
        .transition()
        .add(&sys.fertility().scale(1.0 / r0))
        .expect("parts of one splitting share a dimension");
    Ok(spectral::spectral_radius(&renormalized, tol)?.radius)
}

/// Classifies and then certifies strictness: with the combined matrix
/// irreducible, a nonzero transition part, and `R0 > 0`, the non-critical
/// cases satisfy strict inequalities, and the verdict is marked `strict`
/// when the measured gap clears `tol_eq`. Missing preconditions surface as
/// [`TrichotomyError::PreconditionUnmet`] with the plain verdict attached;
/// in the critical case (or with a gap too small to certify) the verdict is
/// returned unmarked.
pub fn classify_strict(
    sys: &SplitSystem,
    tol: &Tolerances,
) -> Result<TrichotomyVerdict, TrichotomyError> {
    let mut verdict = classify(sys, tol)?;
    let mut blockers = Vec::new();
    if !structure::is_irreducible(sys.combined()) {
        blockers.push(StrictBlocker::Reducible);
    }
    if sys.transition().is_zero() {
        blockers.push(StrictBlocker::ZeroTransition);
    }
    if verdict.r0 <= tol.tol_eq {
        blockers.push(StrictBlocker::ZeroReproduction);
    }
    if !blockers.is_empty() {
        return Err(TrichotomyError::PreconditionUnmet { blockers, verdict: Box::new(verdict) });
    }
    let gap = match verdict.case {
        TrichotomyCase::Supercritical => verdict.r0 - verdict.radius_a,
        TrichotomyCase::Subcritical => verdict.radius_a - verdict.r0,
        // Equalities: nothing strict to certify.
        TrichotomyCase::Critical => return Ok(verdict),
    };
    if gap > tol.tol_eq {
        verdict.strict = true;
    }
    Ok(verdict)
}
