use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, RangeFactor};
use crate::psd::PsdMatrix;
use crate::tol::RANK_TOL;

/// Coordinates `K = F Q F^T` on the range of `S`, in which the interval
/// `0 <= K <= S` becomes `0 <= Q <= I`.
#[derive(Debug, Clone)]
pub struct IntervalMap {
    range: RangeFactor,
}

impl IntervalMap {
    pub fn new(s: &PsdMatrix) -> Self {
        Self { range: RangeFactor::new(s, RANK_TOL) }
    }

    /// Dimension of the range of `S`.
    pub fn rank(&self) -> usize {
        self.range.rank()
    }

    pub fn to_ambient(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        self.range.to_ambient(q)
    }

    pub fn to_range(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        self.range.to_range(k)
    }

    /// Chain rule for `f(F Q F^T)`: `F^T grad_K F`.
    pub fn pull_back(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        self.range.pull_back(g)
    }

    /// Projection onto `0 <= Q <= I`.
    pub fn clip(q: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::clip_eigenvalues(q, 0.0, 1.0)
    }
}

/// Nearest point of `{0 <= K <= S}` to `k_raw` in the Frobenius norm of the
/// range coordinates `Q = F^+ K F^{+T}`.
pub fn project_interval(k_raw: &DMatrix<f64>, s: &PsdMatrix) -> Result<PsdMatrix> {
    if k_raw.shape() != (s.dim(), s.dim()) {
        return Err(Error::DimensionMismatch("K and S differ in size".into()));
    }
    if k_raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let map = IntervalMap::new(s);
    let q = IntervalMap::clip(&map.to_range(&linalg::symmetrize(k_raw)));
    Ok(PsdMatrix::new_unchecked(map.to_ambient(&q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn s() -> PsdMatrix {
        PsdMatrix::from_rows(&[alloc::vec![2.0, 0.5], alloc::vec![0.5, 1.0]]).unwrap()
    }

    #[test]
    fn clips_at_both_ends() {
        let s = s();
        assert_relative_eq!(*project_interval(&(s.as_matrix() * 2.0), &s).unwrap(), *s.as_matrix(), epsilon = 1e-12);
        assert_relative_eq!(*project_interval(&(s.as_matrix() * -1.0), &s).unwrap(), DMatrix::zeros(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn interior_unchanged() {
        let s = s();
        let k = s.as_matrix() * 0.3;
        assert_relative_eq!(*project_interval(&k, &s).unwrap(), k, epsilon = 1e-12);
    }

    #[test]
    fn singular_s_maps_into_range() {
        let s = PsdMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let p = project_interval(&DMatrix::identity(2, 2), &s).unwrap();
        assert_relative_eq!(*p, *s.as_matrix(), epsilon = 1e-14);
    }
}
