//! Trajectory iteration `x_{t+1} = A x_t` and empirical growth rates.
//!
//! States are rescaled to unit infinity norm at every step with the true
//! magnitude accumulated in log space, so long supercritical or subcritical
//! runs neither overflow nor underflow. The growth rate is recovered as the
//! exponentiated least-squares slope of the log-norm sequence past a burn-in,
//! which averages out transients and the bounded oscillation of imprimitive
//! (cyclic) systems instead of trusting the last step.

use crate::linalg::vec_inf_norm;
use crate::model::NonNegMatrix;
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum DynamicsError {
    ZeroInitialState,
    DimensionMismatch { expected: usize, found: usize },
    InvalidInitialState { index: usize, value: f64 },
    TooFewSteps { steps: usize, burn_in: usize },
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::ZeroInitialState => write!(f, "initial state is identically zero"),
            DynamicsError::DimensionMismatch { expected, found } => {
                write!(f, "initial state has length {found}, expected {expected}")
            }
            DynamicsError::InvalidInitialState { index, value } => {
                write!(f, "initial state entry {value} at {index} must be finite and nonnegative")
            }
            DynamicsError::TooFewSteps { steps, burn_in } => {
                write!(f, "{steps} steps leave no regression window past burn-in {burn_in}")
            }
        }
    }
}

impl std::error::Error for DynamicsError {}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Rescaled states, infinity norm 1 (the final state is all-zero when
    /// the trajectory was absorbed). `states[t] * exp(log_norms[t])` is the
    /// exact state at time `t`.
    pub states: Vec<Vec<f64>>,
    /// `log ||x_t||_inf`; `-inf` marks absorption at zero.
    pub log_norms: Vec<f64>,
    /// Steps actually applied (may stop short at absorption).
    pub steps: usize,
    /// Whether the trajectory reached the zero state exactly.
    pub absorbed: bool,
}

/// Applies `A` up to `steps` times, recording every rescaled state.
/// Terminates early (with the `absorbed` flag) if the state hits exact zero.
pub fn iterate(a: &NonNegMatrix, x0: &[f64], steps: usize) -> Result<Trajectory, DynamicsError> {
    assert!(steps >= 1, "at least one step is required");
    if x0.len() != a.dim() {
        return Err(DynamicsError::DimensionMismatch { expected: a.dim(), found: x0.len() });
    }
    for (i, v) in x0.iter().enumerate() {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(DynamicsError::InvalidInitialState { index: i, value: *v });
        }
    }
    let norm0 = vec_inf_norm(x0);
    if norm0 == 0.0 {
        return Err(DynamicsError::ZeroInitialState);
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut log_norms = Vec::with_capacity(steps + 1);
    states.push(x0.iter().map(|v| v / norm0).collect::<Vec<_>>());
    log_norms.push(norm0.ln());
    for t in 1..=steps {
        let y = a.matvec(&states[t - 1]);
        let ny = vec_inf_norm(&y);
        if ny == 0.0 {
            states.push(vec![0.0; a.dim()]);
            log_norms.push(f64::NEG_INFINITY);
            return Ok(Trajectory { states, log_norms, steps: t, absorbed: true });
        }
        states.push(y.iter().map(|v| v / ny).collect());
        log_norms.push(log_norms[t - 1] + ny.ln());
    }
    Ok(Trajectory { states, log_norms, steps, absorbed: false })
}

/// Exponentiated least-squares slope of `log ||x_t||` over `t in [burn_in,
/// steps]`. An absorbed trajectory has growth rate 0 by convention.
pub fn growth_rate(traj: &Trajectory, burn_in: usize) -> Result<f64, DynamicsError> {
    if traj.steps <= burn_in + 1 {
        return Err(DynamicsError::TooFewSteps { steps: traj.steps, burn_in });
    }
    let window = &traj.log_norms[burn_in..=traj.steps];
    if window.iter().any(|v| *v == f64::NEG_INFINITY) {
        return Ok(0.0);
    }
    let m = window.len() as f64;
    let t_mean = (m - 1.0) / 2.0;
    let l_mean = window.iter().sum::<f64>() / m;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, l) in window.iter().enumerate() {
        let dt = k as f64 - t_mean;
        num += dt * (l - l_mean);
        den += dt * dt;
    }
    Ok((num / den).exp())
}
