//! Spectral-radius computation for nonnegative matrices.
//!
//! Three routes are provided and kept deliberately independent of each other:
//!
//! * [`spectral_radius`] — power iteration on the shifted matrix `B = A + I`.
//!   The shift removes rotational peripheral spectrum (a pure cycle has
//!   eigenvalues spread around a circle; adding `I` makes the dominant one
//!   strictly largest in modulus) and keeps every iterate strictly positive,
//!   so the Collatz–Wielandt ratios `min_i (Bx)_i / x_i <= r(B) <= max_i
//!   (Bx)_i / x_i` give a two-sided bracket whose width certifies
//!   convergence. Reducible matrices can stall the bracket (the lower ratio
//!   gets pinned at the radius of a transient block); on a detected stall or
//!   an exhausted budget the routine falls back to the Gelfand estimate.
//! * [`gelfand_estimate`] — `||A^(2^k)||_inf^(1/2^k)` by repeated squaring
//!   with per-step normalization. Always an upper bound on `r(A)`, and the
//!   `2^-k` exponent makes the estimate insensitive to accumulated roundoff.
//! * [`eig_oracle`] — full spectrum via characteristic-polynomial
//!   coefficients (Faddeev–LeVerrier) and Durand–Kerner root iteration.
//!   Only for desk-scale matrices (`n <= 12`); serves as the independent
//!   cross-check for the iterative routes.

use crate::linalg::{vec_inf_norm, DenseMatrix};
use crate::model::{NonNegMatrix, Tolerances};
use num_complex::Complex64;
use std::fmt;

/// Largest dimension accepted by [`eig_oracle`].
pub const MAX_ORACLE_DIM: usize = 12;

/// Squaring budget used when [`spectral_radius`] falls back to the Gelfand
/// estimate: `A^(2^52)` leaves the systematic bias orders of magnitude below
/// the convergence tolerances used anywhere in the crate.
const GELFAND_FALLBACK_KMAX: usize = 52;

/// Iterations between stall checks of the Collatz–Wielandt bracket.
const STALL_WINDOW: usize = 256;

/// Durand–Kerner iteration cap.
const DK_MAX_ITER: usize = 600;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralMethod {
    PowerIteration,
    Gelfand,
    CharPolyOracle,
}

impl fmt::Display for SpectralMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralMethod::PowerIteration => write!(f, "power_iteration"),
            SpectralMethod::Gelfand => write!(f, "gelfand"),
            SpectralMethod::CharPolyOracle => write!(f, "char_poly_oracle"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralResult {
    pub radius: f64,
    pub method: SpectralMethod,
    /// Power-iteration steps, or the squaring count `k` for the Gelfand route.
    pub iterations: usize,
    /// `||Ax - radius * x||_inf / ||x||_inf` for power iteration; the gap
    /// between the two most recent estimates for the Gelfand route.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectralError {
    /// Neither the Collatz–Wielandt bracket nor the Gelfand fallback reached
    /// tolerance within budget.
    NoConvergence { iterations: usize, bracket_width: f64, gelfand_gap: f64 },
    DimensionTooLarge { dim: usize, max: usize },
    RootFindingStalled { residual: f64 },
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::NoConvergence { iterations, bracket_width, gelfand_gap } => write!(
                f,
                "no convergence after {iterations} iterations \
                 (bracket width {bracket_width:e}, gelfand gap {gelfand_gap:e})"
            ),
            SpectralError::DimensionTooLarge { dim, max } => {
                write!(f, "dimension {dim} exceeds oracle limit {max}")
            }
            SpectralError::RootFindingStalled { residual } => {
                write!(f, "root finding stalled at residual {residual:e}")
            }
        }
    }
}

impl std::error::Error for SpectralError {}

/// Outcome of a Collatz–Wielandt power run on `B = A + I`.
pub(crate) struct CwRun {
    /// Bracket midpoint for `r(B)`; subtract 1 for `r(A)`.
    pub rho_b: f64,
    /// Final iterate, normalized to infinity norm 1. Strictly positive for
    /// irreducible input.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `||B x - rho_b x||_inf` at exit (`||x||_inf = 1`).
    pub residual: f64,
    pub converged: bool,
    pub bracket_width: f64,
}

/// Power iteration with two-sided Collatz–Wielandt bracketing.
///
/// The diagonal of `B = A + I` is at least 1, so a strictly positive start
/// vector stays strictly positive and every ratio `(Bx)_i / x_i` is defined
/// (components that underflow to zero are skipped; that only happens in
/// stalled reducible cases which the caller resolves differently).
pub(crate) fn cw_power_iteration(a: &NonNegMatrix, tol: &Tolerances, detect_stall: bool) -> CwRun {
    let n = a.dim();
    let b = a.dense().shifted(1.0);
    let mut x = vec![1.0f64; n];
    let mut window_width = f64::INFINITY;
    let mut last = CwRun {
        rho_b: 1.0,
        vector: x.clone(),
        iterations: 0,
        residual: f64::INFINITY,
        converged: false,
        bracket_width: f64::INFINITY,
    };
    for it in 1..=tol.max_iter {
        let y = b.matvec(&x);
        let mut mn = f64::INFINITY;
        let mut mx: f64 = 0.0;
        for i in 0..n {
            if x[i] > 0.0 {
                let r = y[i] / x[i];
                mn = mn.min(r);
                mx = mx.max(r);
            }
        }
        let width = mx - mn;
        let rho_b = 0.5 * (mn + mx);
        // Scale-aware acceptance: absolute tol_spec near radius 0, relative
        // for large radii.
        if width <= tol.tol_spec * (mn - 1.0).max(1.0) {
            let mut residual = 0.0f64;
            for i in 0..n {
                residual = residual.max((y[i] - rho_b * x[i]).abs());
            }
            return CwRun { rho_b, vector: normalized(y), iterations: it, residual, converged: true, bracket_width: width };
        }
        let ny = vec_inf_norm(&y);
        debug_assert!(ny > 0.0, "shifted iterate cannot vanish");
        x = y.iter().map(|v| v / ny).collect();
        last = CwRun {
            rho_b,
            vector: x.clone(),
            iterations: it,
            residual: width,
            converged: false,
            bracket_width: width,
        };
        if detect_stall && it % STALL_WINDOW == 0 {
            // Sub-geometric narrowing means the bracket is pinned by a
            // transient block; more iterations will not certify anything.
            if width > 0.90 * window_width {
                break;
            }
            window_width = width;
        }
    }
    last
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let m = vec_inf_norm(&v);
    if m > 0.0 {
        for x in &mut v {
            *x /= m;
        }
    }
    v
}

/// Spectral radius of a nonnegative matrix.
///
/// Power iteration on `A + I` until the Collatz–Wielandt bracket narrows
/// below `tol_spec * max(1, r)`; on a stalled bracket or exhausted budget,
/// falls back to [`gelfand_estimate`]. The reported method records the route
/// that actually produced the value.
pub fn spectral_radius(a: &NonNegMatrix, tol: &Tolerances) -> Result<SpectralResult, SpectralError> {
    let run = cw_power_iteration(a, tol, true);
    if run.converged {
        // rho_b >= 1 because every ratio dominates the unit diagonal of B.
        return Ok(SpectralResult {
            radius: run.rho_b - 1.0,
            method: SpectralMethod::PowerIteration,
            iterations: run.iterations,
            residual: run.residual,
        });
    }
    let g = gelfand_estimate(a, GELFAND_FALLBACK_KMAX);
    if g.residual <= tol.tol_spec * g.radius.max(1.0) {
        return Ok(g);
    }
    Err(SpectralError::NoConvergence {
        iterations: run.iterations,
        bracket_width: run.bracket_width,
        gelfand_gap: g.residual,
    })
}

/// Gelfand estimate `||A^(2^k)||_inf^(1/2^k)` via repeated squaring.
///
/// The matrix is renormalized at every squaring and the scale is accumulated
/// in log space, so no overflow occurs for any `k_max`. The estimate is an
/// upper bound on `r(A)` for every `k` (submultiplicativity of the operator
/// norm) and decreases toward it; `residual` reports the gap between the two
/// most recent estimates. An exactly nilpotent power short-circuits to a
/// radius of 0.
pub fn gelfand_estimate(a: &NonNegMatrix, k_max: usize) -> SpectralResult {
    assert!(k_max >= 1, "k_max must be at least 1");
    let norm0 = a.dense().op_inf_norm();
    if norm0 == 0.0 {
        return SpectralResult { radius: 0.0, method: SpectralMethod::Gelfand, iterations: 0, residual: 0.0 };
    }
    // Invariant: A^(2^k) = exp(log_scale) * m with ||m||_inf = 1.
    let mut m = a.dense().scale(1.0 / norm0);
    let mut log_scale = norm0.ln();
    let mut est_prev = norm0;
    let mut est = norm0;
    let mut residual = f64::INFINITY;
    for k in 1..=k_max {
        let sq = m.matmul(&m);
        let nm = sq.op_inf_norm();
        if nm == 0.0 {
            return SpectralResult { radius: 0.0, method: SpectralMethod::Gelfand, iterations: k, residual: 0.0 };
        }
        m = sq.scale(1.0 / nm);
        log_scale = 2.0 * log_scale + nm.ln();
        est = (log_scale / 2f64.powi(k as i32)).exp();
        residual = (est - est_prev).abs();
        est_prev = est;
    }
    SpectralResult { radius: est, method: SpectralMethod::Gelfand, iterations: k_max, residual }
}

/// Full spectrum of a desk-scale matrix, independent of the iterative routes.
///
/// Characteristic-polynomial coefficients come from the Faddeev–LeVerrier
/// recurrence; roots from Durand–Kerner simultaneous iteration initialized on
/// the circle of the Cauchy bound. Exact (structural) zero eigenvalues are
/// deflated before root finding, since a multiple root at zero would smear
/// into a wide cluster. Roots are returned sorted by real part, then
/// imaginary part.
pub fn eig_oracle(a: &NonNegMatrix) -> Result<Vec<Complex64>, SpectralError> {
    let n = a.dim();
    if n > MAX_ORACLE_DIM {
        return Err(SpectralError::DimensionTooLarge { dim: n, max: MAX_ORACLE_DIM });
    }
    let coeffs = char_poly(a.dense());

    // Deflate structural zero roots: leading low-order coefficients at
    // roundoff level relative to the largest coefficient.
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let zero_thresh = 1e-13 * scale.max(1.0);
    let mut k0 = 0;
    while k0 < n && coeffs[k0].abs() <= zero_thresh {
        k0 += 1;
    }
    let deg = n - k0;
    let mut roots = vec![Complex64::new(0.0, 0.0); k0];
    if deg > 0 {
        let q = &coeffs[k0..=n];
        roots.extend(durand_kerner(q)?);
    }
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(roots)
}

/// Largest modulus among eigenvalues (0 for an empty list).
pub fn max_modulus(eigenvalues: &[Complex64]) -> f64 {
    eigenvalues.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Monic characteristic polynomial coefficients, `coeffs[k]` multiplying
/// `lambda^k`, via Faddeev–LeVerrier.
fn char_poly(a: &DenseMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut coeffs = vec![0.0f64; n + 1];
    coeffs[n] = 1.0;
    let mut m = a.clone();
    let mut c = -trace(&m);
    coeffs[n - 1] = c;
    for k in 2..=n {
        m = a.matmul(&m.shifted(c));
        c = -trace(&m) / k as f64;
        coeffs[n - k] = c;
    }
    coeffs
}

fn trace(m: &DenseMatrix) -> f64 {
    (0..m.dim()).map(|i| m.get(i, i)).sum()
}

/// Durand–Kerner on a monic polynomial given by `coeffs[0..=deg]`,
/// `coeffs[deg] = 1`.
fn durand_kerner(coeffs: &[f64]) -> Result<Vec<Complex64>, SpectralError> {
    let deg = coeffs.len() - 1;
    debug_assert!(deg >= 1 && coeffs[deg] == 1.0);
    if deg == 1 {
        return Ok(vec![Complex64::new(-coeffs[0], 0.0)]);
    }
    let cauchy = 1.0 + coeffs[..deg].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    // Offset start angle: keeps the initial guesses away from real-axis
    // symmetry that would lock conjugate pairs together.
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4;
            Complex64::from_polar(cauchy, theta)
        })
        .collect();
    let step_floor = 1e-14 * (1.0 + cauchy);
    for _ in 0..DK_MAX_ITER {
        let mut max_step = 0.0f64;
        for k in 0..deg {
            let pv = horner(coeffs, z[k]);
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != k {
                    den *= z[k] - z[j];
                }
            }
            if den.norm() == 0.0 {
                // Collided guesses: nudge and retry on the next sweep.
                z[k] += Complex64::new(1e-8 * (1.0 + cauchy), 1e-8);
                max_step = f64::INFINITY;
                continue;
            }
            let dz = pv / den;
            z[k] -= dz;
            max_step = max_step.max(dz.norm());
        }
        if max_step <= step_floor {
            break;
        }
    }
    // Accept on polynomial residual, not step size: clustered (multiple)
    // roots jitter at roundoff level but still satisfy the residual bound.
    let residual_scale = cauchy.max(1.0).powi(deg as i32);
    let worst = z
        .iter()
        .map(|&zk| horner(coeffs, zk).norm())
        .fold(0.0f64, f64::max);
    if worst > 1e-12 * residual_scale {
        return Err(SpectralError::RootFindingStalled { residual: worst / residual_scale });
    }
    Ok(z)
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}
