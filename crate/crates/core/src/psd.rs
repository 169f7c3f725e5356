use alloc::vec::Vec;
use core::ops::Deref;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tol::{PD_TOL, PSD_ORDER_TOL, SYM_TOL};

/// A symmetric positive semidefinite matrix.
///
/// Construction checks symmetry (relative to the largest entry) and that no
/// eigenvalue falls below `-PD_TOL * lambda_max`; the stored data is the exact
/// symmetric part of the input. Serializes as row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PsdMatrix(DMatrix<f64>);

impl PsdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "PSD matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = linalg::max_abs_entry(&m).max(1.0);
        let asym = linalg::asymmetry(&m);
        if asym > SYM_TOL * scale {
            return Err(Error::NotSymmetric(asym));
        }
        let sym = linalg::symmetrize(&m);
        let (vals, _) = linalg::sym_eigen(&sym);
        let top = vals.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if m.nrows() > 0 && min < -PD_TOL * top {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        Ok(Self(sym))
    }

    /// Wraps a matrix known to be PSD up to rounding; only symmetrizes.
    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        Self(linalg::symmetrize(&m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(linalg::matrix_from_rows(rows)?)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::from_diagonal(&[x])
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        linalg::matrix_to_rows(&self.0)
    }

    /// `c * self` for `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        debug_assert!(c >= 0.0);
        Self(&self.0 * c)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.0)
    }

    /// Strict positive definiteness with the relative threshold `rel_tol`.
    pub fn is_positive_definite(&self, rel_tol: f64) -> bool {
        let (vals, _) = linalg::sym_eigen(&self.0);
        let top = vals.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        self.dim() == 0 || (top > 0.0 && vals[0] > rel_tol * top)
    }

    /// `self <= other` within [`PSD_ORDER_TOL`].
    pub fn loewner_le(&self, other: &PsdMatrix) -> bool {
        linalg::loewner_leq(&self.0, &other.0, PSD_ORDER_TOL)
    }

    /// Errors with [`Error::OrderViolation`] unless `0 <= self <= upper`.
    pub fn check_interval(&self, upper: &PsdMatrix) -> Result<()> {
        if self.dim() != upper.dim() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "K is {0}x{0} but S is {1}x{1}",
                self.dim(),
                upper.dim()
            )));
        }
        if self.loewner_le(upper) {
            Ok(())
        } else {
            Err(Error::OrderViolation(linalg::loewner_slack(&self.0, &upper.0)))
        }
    }
}

impl Deref for PsdMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl TryFrom<Vec<Vec<f64>>> for PsdMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<PsdMatrix> for Vec<Vec<f64>> {
    fn from(m: PsdMatrix) -> Self {
        m.to_rows()
    }
}
