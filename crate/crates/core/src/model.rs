//! Validated nonnegative matrices, splittings `A = T + F`, and the shared
//! tolerance bundle.
//!
//! A [`SplitSystem`] separates a nonnegative system into a transition part `T`
//! (survival/residence) and a fertility part `F` (new cases/births). The
//! constructor enforces subcriticality of the transition part, `r(T) < 1`,
//! which is what makes the next-generation operator `F(I - T)^{-1}` well
//! defined.

use crate::linalg::DenseMatrix;
use crate::spectral::{self, SpectralError};
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    /// Input rows do not form a square matrix of positive dimension.
    NotSquare { rows: usize, cols: usize },
    NegativeEntry { row: usize, col: usize, value: f64 },
    NonFiniteEntry { row: usize, col: usize },
    DimensionMismatch { left: usize, right: usize },
    /// `r(T)` is not safely below 1; the next-generation operator would be
    /// undefined or numerically meaningless.
    SubcriticalityViolated { radius: f64, limit: f64 },
    InvalidTolerance(&'static str),
    Spectral(SpectralError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NotSquare { rows, cols } => {
                write!(f, "expected a square matrix of positive dimension, got {rows}x{cols}")
            }
            ModelError::NegativeEntry { row, col, value } => {
                write!(f, "negative entry {value} at ({row}, {col})")
            }
            ModelError::NonFiniteEntry { row, col } => {
                write!(f, "non-finite entry at ({row}, {col})")
            }
            ModelError::DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            ModelError::SubcriticalityViolated { radius, limit } => {
                write!(f, "transition radius r(T) = {radius} must stay below {limit}")
            }
            ModelError::InvalidTolerance(what) => write!(f, "invalid tolerance: {what}"),
            ModelError::Spectral(e) => write!(f, "spectral computation failed: {e}"),
        }
    }
}

impl std::error::Error for ModelError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ModelError::Spectral(e) => Some(e),
            _ => None,
        }
    }
}

impl From<SpectralError> for ModelError {
    fn from(e: SpectralError) -> Self {
        ModelError::Spectral(e)
    }
}

/// Tolerance bundle shared across the crate. All fields must be positive.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Equality/comparison tolerance for derived quantities (e.g. `|R0 - 1|`).
    pub tol_eq: f64,
    /// Convergence tolerance for spectral-radius iterations.
    pub tol_spec: f64,
    /// Safety margin keeping `r(T)` away from 1 and resolvent arguments away
    /// from `r(T)`.
    pub tol_split: f64,
    /// Iteration budget for power iterations and root finding.
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_eq: 1e-9,
            tol_spec: 1e-10,
            tol_split: 1e-8,
            max_iter: 100_000,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.tol_eq > 0.0 && self.tol_eq.is_finite()) {
            return Err(ModelError::InvalidTolerance("tol_eq must be positive and finite"));
        }
        if !(self.tol_spec > 0.0 && self.tol_spec.is_finite()) {
            return Err(ModelError::InvalidTolerance("tol_spec must be positive and finite"));
        }
        if !(self.tol_split > 0.0 && self.tol_split.is_finite()) {
            return Err(ModelError::InvalidTolerance("tol_split must be positive and finite"));
        }
        if self.max_iter == 0 {
            return Err(ModelError::InvalidTolerance("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Square matrix with finite, entrywise-nonnegative entries.
#[derive(Clone, Debug, PartialEq)]
pub struct NonNegMatrix {
    inner: DenseMatrix,
}

impl NonNegMatrix {
    /// Validates and wraps row data. Shape is checked first, then entries in
    /// row-major order; the first offending entry is reported.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = rows.len();
        if n == 0 {
            return Err(ModelError::NotSquare { rows: 0, cols: 0 });
        }
        for r in rows {
            if r.len() != n {
                return Err(ModelError::NotSquare { rows: n, cols: r.len() });
            }
        }
        let m = DenseMatrix::from_rows(rows).expect("shape checked above");
        Self::from_dense(m)
    }

    /// Validates a dense matrix for nonnegativity and finiteness.
    pub fn from_dense(m: DenseMatrix) -> Result<Self, ModelError> {
        let n = m.dim();
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if !v.is_finite() {
                    return Err(ModelError::NonFiniteEntry { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(ModelError::NegativeEntry { row: i, col: j, value: v });
                }
            }
        }
        Ok(NonNegMatrix { inner: m })
    }

    /// Wraps a matrix whose nonnegativity was established by construction
    /// (sums/products of nonnegative matrices, clamped resolvents).
    pub(crate) fn from_dense_unchecked(m: DenseMatrix) -> Self {
        debug_assert!(m.data().iter().all(|v| v.is_finite() && *v >= 0.0));
        NonNegMatrix { inner: m }
    }

    pub fn zeros(n: usize) -> Self {
        NonNegMatrix { inner: DenseMatrix::zeros(n) }
    }

    pub fn identity(n: usize) -> Self {
        NonNegMatrix { inner: DenseMatrix::identity(n) }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn dense(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn into_dense(self) -> DenseMatrix {
        self.inner
    }

    pub fn add(&self, other: &NonNegMatrix) -> Result<NonNegMatrix, ModelError> {
        if self.dim() != other.dim() {
            return Err(ModelError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(NonNegMatrix::from_dense_unchecked(self.inner.add(&other.inner)))
    }

    /// Entrywise scaling by `alpha >= 0`.
    pub fn scale(&self, alpha: f64) -> NonNegMatrix {
        assert!(alpha >= 0.0 && alpha.is_finite(), "scale factor must be nonnegative");
        NonNegMatrix::from_dense_unchecked(self.inner.scale(alpha))
    }

    /// `self + c * I` for `c >= 0`.
    pub fn shifted(&self, c: f64) -> NonNegMatrix {
        assert!(c >= 0.0 && c.is_finite(), "shift must be nonnegative");
        NonNegMatrix::from_dense_unchecked(self.inner.shifted(c))
    }

    pub fn matmul(&self, other: &NonNegMatrix) -> Result<NonNegMatrix, ModelError> {
        if self.dim() != other.dim() {
            return Err(ModelError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(NonNegMatrix::from_dense_unchecked(self.inner.matmul(&other.inner)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.inner.matvec(x)
    }

    pub fn transpose(&self) -> NonNegMatrix {
        NonNegMatrix::from_dense_unchecked(self.inner.transpose())
    }

    pub fn op_inf_norm(&self) -> f64 {
        self.inner.op_inf_norm()
    }

    pub fn max_entry(&self) -> f64 {
        self.inner.max_abs()
    }

    pub fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    /// Exact entrywise comparison `self <= other`.
    pub fn entrywise_leq(&self, other: &NonNegMatrix) -> Result<bool, ModelError> {
        if self.dim() != other.dim() {
            return Err(ModelError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(self
            .inner
            .data()
            .iter()
            .zip(other.inner.data())
            .all(|(a, b)| a <= b))
    }
}

/// A splitting `A = T + F` with subcritical transition part.
///
/// The transition radius `r(T)` is computed once at construction and cached,
/// together with the smallest resolvent argument `r(T) + tol_split` that the
/// resolvent routines will accept.
#[derive(Clone, Debug)]
pub struct SplitSystem {
    transition: NonNegMatrix,
    fertility: NonNegMatrix,
    combined: NonNegMatrix,
    transition_radius: f64,
    lambda_floor: f64,
}

impl SplitSystem {
    pub fn new(
        transition: NonNegMatrix,
        fertility: NonNegMatrix,
        tol: &Tolerances,
    ) -> Result<Self, ModelError> {
        tol.validate()?;
        if transition.dim() != fertility.dim() {
            return Err(ModelError::DimensionMismatch {
                left: transition.dim(),
                right: fertility.dim(),
            });
        }
        let combined = transition.add(&fertility)?;
        let transition_radius = spectral::spectral_radius(&transition, tol)?.radius;
        if transition_radius >= 1.0 - tol.tol_split {
            return Err(ModelError::SubcriticalityViolated {
                radius: transition_radius,
                limit: 1.0 - tol.tol_split,
            });
        }
        Ok(SplitSystem {
            lambda_floor: transition_radius + tol.tol_split,
            transition,
            fertility,
            combined,
            transition_radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.combined.dim()
    }

    pub fn transition(&self) -> &NonNegMatrix {
        &self.transition
    }

    pub fn fertility(&self) -> &NonNegMatrix {
        &self.fertility
    }

    /// The recombined system matrix `A = T + F`.
    pub fn combined(&self) -> &NonNegMatrix {
        &self.combined
    }

    pub fn transition_radius(&self) -> f64 {
        self.transition_radius
    }

    /// Smallest `lambda` accepted by the resolvent routines.
    pub fn lambda_floor(&self) -> f64 {
        self.lambda_floor
    }
}
