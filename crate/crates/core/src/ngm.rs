//! Resolvents of the transition part, next-generation operators, and the
//! reproduction number `R0`.
//!
//! For a splitting `A = T + F` with `r(T) < 1` the central objects are the
//! resolvent `(lambda I - T)^{-1}` (defined for `lambda > r(T)`) and the
//! lambda-family of next-generation operators `F (lambda I - T)^{-1}`. The
//! map `lambda -> r(F (lambda I - T)^{-1})` is non-increasing and convex on
//! `(r(T), inf)`; `R0` is its value at `lambda = 1`. Whenever the curve
//! reaches the level 1 it does so exactly at `lambda = r(A)`, which is what
//! [`bisect_radius`] exploits to recover the growth rate of `A` without ever
//! touching `A` itself; otherwise the curve stays below 1 and `r(A) = r(T)`.
//!
//! Resolvents are computed by LU factorization with partial pivoting. A
//! truncated Neumann sum is kept alongside as an independent slow route for
//! cross-checking ([`neumann_resolvent`]).

use crate::linalg::DenseMatrix;
use crate::model::{NonNegMatrix, SplitSystem, Tolerances};
use crate::spectral::{self, SpectralError, SpectralResult};
use std::fmt;

/// Relative threshold under which small negative resolvent entries (LU
/// roundoff; the exact resolvent is entrywise nonnegative) are clamped to 0.
const CLAMP_REL: f64 = 1e-12;

/// Separation below which `r(A)` and `r(T)` are considered numerically tied
/// when deciding whether the radius curve ever reaches the level 1.
const TRANSITION_TIE: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub enum NgmError {
    /// `lambda` at or below `r(T) + tol_split`: outside the certified
    /// resolvent domain.
    LambdaTooSmall { lambda: f64, floor: f64 },
    /// The linear solve collapsed; with a valid `lambda` this indicates a
    /// broken input rather than a legitimate spectrum hit.
    SingularSolve { lambda: f64 },
    /// Malformed sampling range for the radius curve.
    BadRange { detail: &'static str },
    /// `R0` within `tol_eq` of 1: the crossing coincides with the endpoint
    /// `lambda = 1` and bisection would chase roundoff.
    NearBoundary { r0: f64 },
    Spectral(SpectralError),
}

impl fmt::Display for NgmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NgmError::LambdaTooSmall { lambda, floor } => {
                write!(f, "lambda = {lambda} must exceed r(T) + tol_split = {floor}")
            }
            NgmError::SingularSolve { lambda } => {
                write!(f, "resolvent solve singular at lambda = {lambda}")
            }
            NgmError::BadRange { detail } => write!(f, "bad curve range: {detail}"),
            NgmError::NearBoundary { r0 } => {
                write!(f, "R0 = {r0} is within tolerance of 1; crossing pinned at lambda = 1")
            }
            NgmError::Spectral(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for NgmError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            NgmError::Spectral(e) => Some(e),
            _ => None,
        }
    }
}

impl From<SpectralError> for NgmError {
    fn from(e: SpectralError) -> Self {
        NgmError::Spectral(e)
    }
}

/// A matrix that is nonnegative up to clamped roundoff, with the largest
/// clamped magnitude recorded.
#[derive(Clone, Debug)]
pub struct ClampedMatrix {
    pub matrix: NonNegMatrix,
    pub max_clamp: f64,
}

fn clamp_nonneg(m: DenseMatrix, lambda: f64) -> Result<ClampedMatrix, NgmError> {
    let threshold = CLAMP_REL * m.op_inf_norm();
    let mut max_clamp = 0.0f64;
    let mut out = m;
    for v in out.data_mut() {
        if !v.is_finite() {
            return Err(NgmError::SingularSolve { lambda });
        }
        if *v < 0.0 {
            max_clamp = max_clamp.max(-*v);
            *v = 0.0;
        }
    }
    if max_clamp > threshold {
        // Exact resolvents are entrywise nonnegative; anything beyond
        // roundoff scale means the solve lost all accuracy.
        return Err(NgmError::SingularSolve { lambda });
    }
    Ok(ClampedMatrix { matrix: NonNegMatrix::from_dense_unchecked(out), max_clamp })
}

/// Resolvent `(lambda I - T)^{-1}` by LU with partial pivoting.
pub fn transition_resolvent(sys: &SplitSystem, lambda: f64) -> Result<ClampedMatrix, NgmError> {
    if !(lambda > sys.lambda_floor()) {
        return Err(NgmError::LambdaTooSmall { lambda, floor: sys.lambda_floor() });
    }
    let shifted = sys.transition().dense().scale(-1.0).shifted(lambda);
    let inv = shifted
        .inverse()
        .map_err(|_| NgmError::SingularSolve { lambda })?;
    clamp_nonneg(inv, lambda)
}

/// Truncated Neumann sum `sum_{k=0}^{terms-1} lambda^{-k-1} T^k`.
///
/// Converges to the resolvent entrywise from below as `terms` grows; kept as
/// an implementation-independent oracle for [`transition_resolvent`].
pub fn neumann_resolvent(
    sys: &SplitSystem,
    lambda: f64,
    terms: usize,
) -> Result<NonNegMatrix, NgmError> {
    assert!(terms >= 1, "at least one Neumann term is required");
    if !(lambda > sys.transition_radius()) {
        return Err(NgmError::LambdaTooSmall { lambda, floor: sys.transition_radius() });
    }
    let n = sys.dim();
    let scaled_t = sys.transition().dense().scale(1.0 / lambda);
    // Invariant: power = lambda^{-k-1} T^k.
    let mut power = DenseMatrix::identity(n).scale(1.0 / lambda);
    let mut sum = power.clone();
    for _ in 1..terms {
        power = power.matmul(&scaled_t);
        sum = sum.add(&power);
    }
    Ok(NonNegMatrix::from_dense_unchecked(sum))
}

/// Next-generation operator `F (lambda I - T)^{-1}`.
pub fn next_generation(sys: &SplitSystem, lambda: f64) -> Result<ClampedMatrix, NgmError> {
    let resolvent = transition_resolvent(sys, lambda)?;
    let product = sys.fertility().dense().matmul(resolvent.matrix.dense());
    Ok(ClampedMatrix {
        matrix: NonNegMatrix::from_dense_unchecked(product),
        max_clamp: resolvent.max_clamp,
    })
}

/// Reproduction number `R0 = r(F (I - T)^{-1})`.
///
/// Always defined for a valid [`SplitSystem`]: the constructor guarantees
/// `r(T) + tol_split < 1`, so `lambda = 1` lies in the resolvent domain.
pub fn r0(sys: &SplitSystem, tol: &Tolerances) -> Result<SpectralResult, NgmError> {
    let m = next_generation(sys, 1.0)?;
    Ok(spectral::spectral_radius(&m.matrix, tol)?)
}

/// Sampled radius curve `lambda -> r(F (lambda I - T)^{-1})` with its
/// monotonicity/convexity audit.
#[derive(Clone, Debug)]
pub struct CurveSample {
    /// `(lambda, radius)` pairs at evenly spaced `lambda`.
    pub points: Vec<(f64, f64)>,
    /// Consecutive radii never increase beyond `tol_eq`.
    pub monotone_ok: bool,
    /// Second differences never dip below `-tol_eq`.
    pub convex_ok: bool,
    /// Worst violation magnitude across both audits (0 when clean).
    pub max_violation: f64,
}

/// Samples the radius curve at `samples >= 3` evenly spaced points of
/// `[lambda_min, lambda_max]` and audits monotone decrease and convexity.
pub fn radius_curve(
    sys: &SplitSystem,
    lambda_min: f64,
    lambda_max: f64,
    samples: usize,
    tol: &Tolerances,
) -> Result<CurveSample, NgmError> {
    if samples < 3 {
        return Err(NgmError::BadRange { detail: "need at least 3 samples" });
    }
    if !(lambda_min.is_finite() && lambda_max.is_finite() && lambda_min < lambda_max) {
        return Err(NgmError::BadRange { detail: "lambda_min must be below lambda_max" });
    }
    if !(lambda_min > sys.lambda_floor()) {
        return Err(NgmError::LambdaTooSmall { lambda: lambda_min, floor: sys.lambda_floor() });
    }
    let step = (lambda_max - lambda_min) / (samples - 1) as f64;
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let lambda = if i + 1 == samples { lambda_max } else { lambda_min + step * i as f64 };
        let m = next_generation(sys, lambda)?;
        let radius = spectral::spectral_radius(&m.matrix, tol)?.radius;
        points.push((lambda, radius));
    }
    let mut max_violation = 0.0f64;
    let mut monotone_ok = true;
    for w in points.windows(2) {
        let rise = w[1].1 - w[0].1;
        if rise > tol.tol_eq {
            monotone_ok = false;
        }
        max_violation = max_violation.max(rise);
    }
    let mut convex_ok = true;
    for w in points.windows(3) {
        let dip = -(w[2].1 - 2.0 * w[1].1 + w[0].1);
        if dip > tol.tol_eq {
            convex_ok = false;
        }
        max_violation = max_violation.max(dip);
    }
    Ok(CurveSample { points, monotone_ok, convex_ok, max_violation: max_violation.max(0.0) })
}

/// Where the radius curve meets the level 1, with the independent growth
/// radius alongside for cross-checking.
#[derive(Clone, Debug)]
pub struct BisectResult {
    /// Curve crossing `lambda*` when the curve reaches 1; otherwise `r(A)`
    /// (which then ties with `r(T)`).
    pub lambda_star: f64,
    /// Curve value at `lambda_star`, when it is inside the resolvent domain.
    pub curve_value: Option<f64>,
    /// `r(A)` computed directly from `A = T + F`.
    pub radius_a: f64,
    /// Whether the curve reaches the level 1 anywhere on `(r(T), inf)`.
    pub curve_crosses_one: bool,
    /// Bisection steps taken (0 on the direct subcritical paths).
    pub iterations: usize,
}

fn curve_radius(sys: &SplitSystem, lambda: f64, tol: &Tolerances) -> Result<f64, NgmError> {
    let m = next_generation(sys, lambda)?;
    Ok(spectral::spectral_radius(&m.matrix, tol)?.radius)
}

/// Recovers `r(A)` from the radius curve alone.
///
/// With `R0 > 1` the crossing of the level 1 lies in `[1, inf)`: the upper
/// end is found by doubling, then plain bisection runs until the curve value
/// is within `tol_eq` of 1. With `R0 < 1` no bisection is needed: either
/// `r(A)` still separates from `r(T)` (the curve crosses 1 below `lambda =
/// 1`) or the curve stays below 1 everywhere and `r(A) = r(T)`. `R0` within
/// `tol_eq` of 1 is refused as [`NgmError::NearBoundary`].
pub fn bisect_radius(sys: &SplitSystem, tol: &Tolerances) -> Result<BisectResult, NgmError> {
    let r0_value = r0(sys, tol)?.radius;
    if (r0_value - 1.0).abs() <= tol.tol_eq {
        return Err(NgmError::NearBoundary { r0: r0_value });
    }
    let radius_a = spectral::spectral_radius(sys.combined(), tol)?.radius;
    if r0_value < 1.0 {
        // Subcritical: classify which side of the dichotomy we are on by the
        // separation between r(A) and r(T).
        if radius_a - sys.transition_radius() > TRANSITION_TIE {
            let curve_value = curve_radius(sys, radius_a, tol)?;
            return Ok(BisectResult {
                lambda_star: radius_a,
                curve_value: Some(curve_value),
                radius_a,
                curve_crosses_one: true,
                iterations: 0,
            });
        }
        return Ok(BisectResult {
            lambda_star: radius_a,
            curve_value: None,
            radius_a,
            curve_crosses_one: false,
            iterations: 0,
        });
    }

    // Supercritical: bracket the crossing with lambda doubled from 1.
    let mut lo = 1.0f64;
    let mut hi = 2.0f64;
    let mut iterations = 0usize;
    while curve_radius(sys, hi, tol)? >= 1.0 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if hi > 1e18 {
            return Err(NgmError::BadRange { detail: "crossing bracket failed to close" });
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let value = curve_radius(sys, mid, tol)?;
        iterations += 1;
        if (value - 1.0).abs() <= tol.tol_eq {
            return Ok(BisectResult {
                lambda_star: mid,
                curve_value: Some(value),
                radius_a,
                curve_crosses_one: true,
                iterations,
            });
        }
        if value > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.max(1.0) {
            // Interval exhausted: the curve step across the crossing is
            // bounded by the evaluation noise, so `mid` is as good as the
            // arithmetic permits.
            let value = curve_radius(sys, mid, tol)?;
            return Ok(BisectResult {
                lambda_star: mid,
                curve_value: Some(value),
                radius_a,
                curve_crosses_one: true,
                iterations,
            });
        }
    }
}

/// Relative infinity-norm discrepancy of the resolvent factorization
/// `(lambda - A)^{-1} = (lambda - T)^{-1} (I - F (lambda - T)^{-1})^{-1}`,
/// valid for `lambda > max(r(A), r(T))`.
pub fn factorization_discrepancy(sys: &SplitSystem, lambda: f64) -> Result<f64, NgmError> {
    let lhs = sys
        .combined()
        .dense()
        .scale(-1.0)
        .shifted(lambda)
        .inverse()
        .map_err(|_| NgmError::SingularSolve { lambda })?;
    let resolvent = transition_resolvent(sys, lambda)?;
    let ngm = sys.fertility().dense().matmul(resolvent.matrix.dense());
    let correction = ngm
        .scale(-1.0)
        .shifted(1.0)
        .inverse()
        .map_err(|_| NgmError::SingularSolve { lambda })?;
    let rhs = resolvent.matrix.dense().matmul(&correction);
    let denom = lhs.op_inf_norm();
    if denom == 0.0 {
        return Err(NgmError::SingularSolve { lambda });
    }
    Ok(lhs.sub(&rhs).op_inf_norm() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NonNegMatrix, SplitSystem, Tolerances};

    const RA_WORKED: f64 = 1.3660254037844386;

    fn worked_system() -> SplitSystem {
        let t = NonNegMatrix::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let f = NonNegMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        SplitSystem::new(t, f, &Tolerances::default()).unwrap()
    }

    fn scalar_system(t: f64, f: f64) -> SplitSystem {
        SplitSystem::new(
            NonNegMatrix::from_rows(&[vec![t]]).unwrap(),
            NonNegMatrix::from_rows(&[vec![f]]).unwrap(),
            &Tolerances::default(),
        )
        .unwrap()
    }

    fn subcritical_system() -> SplitSystem {
        let t = NonNegMatrix::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let f = NonNegMatrix::from_rows(&[vec![0.25, 0.25], vec![0.0, 0.0]]).unwrap();
        SplitSystem::new(t, f, &Tolerances::default()).unwrap()
    }

    #[test]
    fn resolvent_of_subdiagonal_transition_is_exact() {
        let sys = worked_system();
        let r = transition_resolvent(&sys, 1.0).unwrap();
        assert_eq!(r.max_clamp, 0.0);
        let m = r.matrix;
        assert_eq!(
            (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1)),
            (1.0, 0.0, 0.5, 1.0)
        );
    }

    #[test]
    fn scalar_resolvent_matches_formula() {
        let sys = scalar_system(0.5, 0.0);
        let r = transition_resolvent(&sys, 2.0).unwrap();
        // 1 / (2 - 0.5)
        assert!((r.matrix.get(0, 0) - 1.0 / 1.5).abs() < 1e-14);
    }

    #[test]
    fn lambda_at_the_floor_is_rejected() {
        let sys = scalar_system(0.5, 0.0);
        let floor = sys.lambda_floor();
        match transition_resolvent(&sys, floor) {
            Err(NgmError::LambdaTooSmall { .. }) => {}
            other => panic!("expected LambdaTooSmall, got {other:?}"),
        }
        assert!(transition_resolvent(&sys, floor + 1e-6).is_ok());
    }

    #[test]
    fn neumann_sum_terminates_exactly_for_nilpotent_transition() {
        let sys = worked_system();
        let exact = transition_resolvent(&sys, 1.0).unwrap().matrix;
        // T^2 = 0: two terms already reproduce the resolvent.
        let partial = neumann_resolvent(&sys, 1.0, 2).unwrap();
        assert_eq!(partial.dense(), exact.dense());
    }

    #[test]
    fn neumann_sum_approaches_from_below() {
        let sys = scalar_system(0.5, 0.0);
        let exact = 2.0; // 1 / (1 - 0.5)
        let mut prev = 0.0;
        for terms in [1usize, 2, 4, 8, 32, 64] {
            let v = neumann_resolvent(&sys, 1.0, terms).unwrap().get(0, 0);
            assert!(v <= exact + 1e-15);
            assert!(v >= prev);
            prev = v;
        }
        assert!((prev - exact).abs() < 1e-15);
        assert!(matches!(
            neumann_resolvent(&sys, 0.5, 4),
            Err(NgmError::LambdaTooSmall { .. })
        ));
    }

    #[test]
    fn next_generation_operator_of_worked_fixture() {
        let sys = worked_system();
        let m = next_generation(&sys, 1.0).unwrap().matrix;
        assert_eq!(
            (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1)),
            (1.5, 1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn r0_of_worked_fixture_is_three_halves() {
        let sys = worked_system();
        let r = r0(&sys, &Tolerances::default()).unwrap();
        assert!((r.radius - 1.5).abs() < 1e-9, "r0 {}", r.radius);
    }

    #[test]
    fn r0_vanishes_with_fertility() {
        let sys = scalar_system(0.9, 0.0);
        assert_eq!(r0(&sys, &Tolerances::default()).unwrap().radius, 0.0);
    }

    #[test]
    fn r0_of_subcritical_fixture() {
        let sys = subcritical_system();
        let r = r0(&sys, &Tolerances::default()).unwrap();
        assert!((r.radius - 0.375).abs() < 1e-9, "r0 {}", r.radius);
    }

    #[test]
    fn curve_tracks_scalar_formula_and_passes_audit() {
        let tol = Tolerances::default();
        let sys = scalar_system(0.0, 1.0);
        let c = radius_curve(&sys, 0.5, 2.5, 5, &tol).unwrap();
        for &(lambda, radius) in &c.points {
            assert!((radius - 1.0 / lambda).abs() < 1e-9, "at {lambda}: {radius}");
        }
        assert!(c.monotone_ok && c.convex_ok);
        assert!(c.max_violation <= 1e-9);
    }

    #[test]
    fn curve_on_worked_fixture_decreases_from_r0() {
        let tol = Tolerances::default();
        let sys = worked_system();
        let c = radius_curve(&sys, 1.0, 3.0, 5, &tol).unwrap();
        assert!((c.points[0].1 - 1.5).abs() < 1e-9);
        for w in c.points.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        assert!(c.monotone_ok && c.convex_ok);
    }

    #[test]
    fn degenerate_curve_of_zero_fertility_is_flat_zero() {
        let tol = Tolerances::default();
        let sys = scalar_system(0.5, 0.0);
        let c = radius_curve(&sys, 1.0, 2.0, 4, &tol).unwrap();
        assert!(c.points.iter().all(|&(_, r)| r == 0.0));
        assert!(c.monotone_ok && c.convex_ok && c.max_violation == 0.0);
    }

    #[test]
    fn curve_range_validation() {
        let tol = Tolerances::default();
        let sys = worked_system();
        assert!(matches!(
            radius_curve(&sys, 1.0, 2.0, 2, &tol),
            Err(NgmError::BadRange { .. })
        ));
        assert!(matches!(
            radius_curve(&sys, 2.0, 1.0, 5, &tol),
            Err(NgmError::BadRange { .. })
        ));
        let sys2 = scalar_system(0.5, 1.0);
        assert!(matches!(
            radius_curve(&sys2, 0.3, 2.0, 5, &tol),
            Err(NgmError::LambdaTooSmall { .. })
        ));
    }

    #[test]
    fn bisection_recovers_growth_radius_of_worked_fixture() {
        let sys = worked_system();
        let b = bisect_radius(&sys, &Tolerances::default()).unwrap();
        assert!(b.curve_crosses_one);
        assert!((b.lambda_star - RA_WORKED).abs() < 1e-6, "lambda* {}", b.lambda_star);
        assert!((b.lambda_star - b.radius_a).abs() < 1e-6);
        let v = b.curve_value.unwrap();
        assert!((v - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn bisection_on_scalar_doubles_out_to_two() {
        let sys = scalar_system(0.0, 2.0);
        let b = bisect_radius(&sys, &Tolerances::default()).unwrap();
        assert!((b.lambda_star - 2.0).abs() < 1e-8);
    }

    #[test]
    fn subcritical_branch_returns_growth_radius_directly() {
        let sys = subcritical_system();
        let b = bisect_radius(&sys, &Tolerances::default()).unwrap();
        assert_eq!(b.iterations, 0);
        assert!(b.curve_crosses_one, "r(A) = 0.5 separates from r(T) = 0");
        assert!((b.lambda_star - 0.5).abs() < 1e-9, "lambda* {}", b.lambda_star);
        let v = b.curve_value.unwrap();
        assert!((v - 1.0).abs() < 1e-7, "curve value {v}");
    }

    #[test]
    fn fully_subcritical_system_ties_with_transition_radius() {
        // F = 0: the curve is identically 0 and r(A) = r(T).
        let sys = scalar_system(0.5, 0.0);
        let b = bisect_radius(&sys, &Tolerances::default()).unwrap();
        assert!(!b.curve_crosses_one);
        assert!(b.curve_value.is_none());
        assert!((b.lambda_star - 0.5).abs() < 1e-9);
    }

    #[test]
    fn critical_system_is_refused_as_near_boundary() {
        let sys = scalar_system(0.0, 1.0);
        match bisect_radius(&sys, &Tolerances::default()) {
            Err(NgmError::NearBoundary { r0 }) => assert!((r0 - 1.0).abs() < 1e-12),
            other => panic!("expected NearBoundary, got {other:?}"),
        }
    }

    #[test]
    fn factorization_identity_holds_on_fixtures() {
        let tol = Tolerances::default();
        for sys in [worked_system(), subcritical_system(), scalar_system(0.5, 0.25)] {
            let ra = crate::spectral::spectral_radius(sys.combined(), &tol)
                .unwrap()
                .radius;
            let d = factorization_discrepancy(&sys, ra + 1.0).unwrap();
            assert!(d <= 1e-12, "discrepancy {d}");
        }
    }
}
