//! Age-structured (Leslie) population models on sequence spaces.
//!
//! The update operator places fertilities `f_1, f_2, ...` in the first row
//! and survival fractions `t_1, t_2, ...` on the subdiagonal: age class `i`
//! contributes `f_i x_i` newborns and `t_i x_i` survivors into class `i+1`.
//! With the fertility row as `F` and the survival shift as `T`, the
//! reproduction number has the closed form
//!
//! ```text
//! R0 = f_1 + sum_{i >= 2} f_i * t_1 * t_2 * ... * t_{i-1}
//! ```
//!
//! (expected lifetime offspring of one newborn). The survival shift is
//! "eventually contracting": once the survival fractions drop below some
//! `1 - eps`, products of `n` consecutive fractions decay like `(1-eps)^n`,
//! which bounds `r(T)` by the tail value regardless of finitely many early
//! fractions equal to 1. Finite `n x n` truncations have nilpotent `T`, are
//! always valid splittings, and their reproduction numbers increase to the
//! closed form from below as `n` grows.

use crate::model::{ModelError, NonNegMatrix, SplitSystem, Tolerances};
use crate::ngm::{self, NgmError};
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Fertility {
    /// Explicit per-age fertilities `f_1..f_k`; zero beyond the list.
    FiniteSupport(Vec<f64>),
    /// `f_i = c * beta^(i-1)` with `c >= 0`, `0 <= beta < 1`.
    Geometric { c: f64, beta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Survival {
    /// `t_i = t` for all ages, `0 <= t < 1`.
    Constant(f64),
    /// Explicit values for the first ages (each in `[0, 1]`), then a
    /// constant `tail < 1` beyond the list.
    FiniteList { values: Vec<f64>, tail: f64 },
}

/// Sequence-space norm index `p` in `[1, inf]`. Carried for bookkeeping:
/// the reproduction number does not depend on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormIndex {
    Finite(f64),
    Infinity,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LeslieError {
    InvalidFertility(String),
    InvalidSurvival(String),
    InvalidNormIndex(String),
    /// Series summation failed to contract; unreachable through validated
    /// constructors, kept as a guard for bypassed invariants.
    DivergentSeries { ratio: f64 },
    Split(ModelError),
    Ngm(NgmError),
}

impl fmt::Display for LeslieError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LeslieError::InvalidFertility(s) => write!(f, "invalid fertility: {s}"),
            LeslieError::InvalidSurvival(s) => write!(f, "invalid survival: {s}"),
            LeslieError::InvalidNormIndex(s) => write!(f, "invalid norm index: {s}"),
            LeslieError::DivergentSeries { ratio } => {
                write!(f, "series ratio {ratio} does not contract")
            }
            LeslieError::Split(e) => write!(f, "{e}"),
            LeslieError::Ngm(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LeslieError {}

impl From<ModelError> for LeslieError {
    fn from(e: ModelError) -> Self {
        LeslieError::Split(e)
    }
}

impl From<NgmError> for LeslieError {
    fn from(e: NgmError) -> Self {
        LeslieError::Ngm(e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeslieModel {
    fertility: Fertility,
    survival: Survival,
    p: NormIndex,
}

/// Closed-form reproduction number with its summation bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormR0 {
    pub value: f64,
    /// Bound on the dropped tail (0 when the sum is exact/closed form).
    pub tail_bound: f64,
    /// Terms accumulated (0 when a closed form was used).
    pub terms: usize,
}

/// Certified bound on the survival-shift radius.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalBound {
    /// `r(T) <= bound < 1`.
    pub bound: f64,
    /// Number of leading ages exempt from the bound (products of more than
    /// `settle_index` consecutive fractions contract by the bound).
    pub settle_index: usize,
}

impl LeslieModel {
    pub fn new(fertility: Fertility, survival: Survival, p: NormIndex) -> Result<Self, LeslieError> {
        match &fertility {
            Fertility::FiniteSupport(values) => {
                for (i, v) in values.iter().enumerate() {
                    if !(v.is_finite() && *v >= 0.0) {
                        return Err(LeslieError::InvalidFertility(format!(
                            "f_{} = {v} must be finite and nonnegative",
                            i + 1
                        )));
                    }
                }
            }
            Fertility::Geometric { c, beta } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(LeslieError::InvalidFertility(format!(
                        "geometric scale c = {c} must be finite and nonnegative"
                    )));
                }
                if !(beta.is_finite() && *beta >= 0.0 && *beta < 1.0) {
                    return Err(LeslieError::InvalidFertility(format!(
                        "geometric ratio beta = {beta} must lie in [0, 1)"
                    )));
                }
            }
        }
        match &survival {
            Survival::Constant(t) => {
                if !(t.is_finite() && *t >= 0.0 && *t < 1.0) {
                    return Err(LeslieError::InvalidSurvival(format!(
                        "constant survival t = {t} must lie in [0, 1)"
                    )));
                }
            }
            Survival::FiniteList { values, tail } => {
                for (i, v) in values.iter().enumerate() {
                    if !(v.is_finite() && *v >= 0.0 && *v <= 1.0) {
                        return Err(LeslieError::InvalidSurvival(format!(
                            "t_{} = {v} must lie in [0, 1]",
                            i + 1
                        )));
                    }
                }
                if !(tail.is_finite() && *tail >= 0.0 && *tail < 1.0) {
                    return Err(LeslieError::InvalidSurvival(format!(
                        "tail survival {tail} must lie in [0, 1)"
                    )));
                }
            }
        }
        if let NormIndex::Finite(p_value) = p {
            if !(p_value.is_finite() && p_value >= 1.0) {
                return Err(LeslieError::InvalidNormIndex(format!(
                    "p = {p_value} must be at least 1"
                )));
            }
        }
        Ok(LeslieModel { fertility, survival, p })
    }

    pub fn fertility(&self) -> &Fertility {
        &self.fertility
    }

    pub fn survival(&self) -> &Survival {
        &self.survival
    }

    pub fn norm_index(&self) -> NormIndex {
        self.p
    }

    /// Fertility of age class `i` (1-indexed).
    pub fn fertility_at(&self, i: usize) -> f64 {
        debug_assert!(i >= 1);
        match &self.fertility {
            Fertility::FiniteSupport(values) => values.get(i - 1).copied().unwrap_or(0.0),
            Fertility::Geometric { c, beta } => c * beta.powi(i as i32 - 1),
        }
    }

    /// Survival fraction out of age class `i` (1-indexed).
    pub fn survival_at(&self, i: usize) -> f64 {
        debug_assert!(i >= 1);
        match &self.survival {
            Survival::Constant(t) => *t,
            Survival::FiniteList { values, tail } => values.get(i - 1).copied().unwrap_or(*tail),
        }
    }

    /// `R0 = f_1 + sum_{i>=2} f_i prod_{j<i} t_j`.
    ///
    /// Finite-support fertility sums exactly; geometric fertility with
    /// constant survival collapses to `c / (1 - beta t)`; the mixed case
    /// accumulates partial sums until the geometric tail bound drops below
    /// `tol_eq`, and reports that bound.
    pub fn closed_form_r0(&self, tol: &Tolerances) -> Result<ClosedFormR0, LeslieError> {
        match (&self.fertility, &self.survival) {
            (Fertility::FiniteSupport(values), _) => {
                let mut acc = 0.0;
                let mut product = 1.0; // prod_{j < i} t_j
                for (idx, f) in values.iter().enumerate() {
                    let i = idx + 1;
                    if i >= 2 {
                        product *= self.survival_at(i - 1);
                    }
                    acc += f * product;
                }
                Ok(ClosedFormR0 { value: acc, tail_bound: 0.0, terms: values.len() })
            }
            (Fertility::Geometric { c, beta }, Survival::Constant(t)) => {
                Ok(ClosedFormR0 { value: c / (1.0 - beta * t), tail_bound: 0.0, terms: 0 })
            }
            (Fertility::Geometric { c, beta }, Survival::FiniteList { values, tail }) => {
                // Beyond the explicit list each term picks up a factor
                // beta * tail < 1, so the remainder is a geometric series.
                let ratio = beta * tail;
                if ratio >= 1.0 {
                    return Err(LeslieError::DivergentSeries { ratio });
                }
                let mut acc = 0.0;
                let mut product = 1.0;
                let mut term;
                let mut terms = 0usize;
                let mut i = 1usize;
                let mut tail_bound = f64::INFINITY;
                while tail_bound > tol.tol_eq {
                    if i >= 2 {
                        product *= self.survival_at(i - 1);
                    }
                    term = c * beta.powi(i as i32 - 1) * product;
                    acc += term;
                    terms += 1;
                    if i > values.len() {
                        tail_bound = if ratio > 0.0 { term * ratio / (1.0 - ratio) } else { 0.0 };
                    }
                    if term == 0.0 {
                        tail_bound = 0.0;
                    }
                    i += 1;
                    if terms > 10_000_000 {
                        return Err(LeslieError::DivergentSeries { ratio });
                    }
                }
                Ok(ClosedFormR0 { value: acc, tail_bound, terms })
            }
        }
    }

    /// `n x n` truncation: fertility row `f_1..f_n`, survival subdiagonal
    /// `t_1..t_{n-1}`. The truncated survival shift is nilpotent, so the
    /// splitting is always valid.
    pub fn truncate(&self, n: usize, tol: &Tolerances) -> Result<SplitSystem, LeslieError> {
        assert!(n >= 1, "truncation dimension must be positive");
        let mut t = NonNegMatrix::zeros(n).into_dense();
        for i in 1..n {
            t.set(i, i - 1, self.survival_at(i));
        }
        let mut f = NonNegMatrix::zeros(n).into_dense();
        for j in 0..n {
            f.set(0, j, self.fertility_at(j + 1));
        }
        Ok(SplitSystem::new(
            NonNegMatrix::from_dense_unchecked(t),
            NonNegMatrix::from_dense_unchecked(f),
            tol,
        )?)
    }

    /// Certified contraction bound on the survival-shift radius: the
    /// constant value for constant survival, the tail value beyond the
    /// explicit list otherwise.
    pub fn survival_radius_bound(&self) -> SurvivalBound {
        match &self.survival {
            Survival::Constant(t) => SurvivalBound { bound: *t, settle_index: 0 },
            Survival::FiniteList { values, tail } => {
                SurvivalBound { bound: *tail, settle_index: values.len() }
            }
        }
    }
}

/// Reproduction numbers of the `n`-truncations for each `n` in `ns`
/// (ascending), computed through the generic next-generation machinery.
pub fn truncated_r0_series(
    model: &LeslieModel,
    ns: &[usize],
    tol: &Tolerances,
) -> Result<Vec<(usize, f64)>, LeslieError> {
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let sys = model.truncate(n, tol)?;
        let r = ngm::r0(&sys, tol)?;
        out.push((n, r.radius));
    }
    Ok(out)
}
