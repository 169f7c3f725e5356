//! Dense symmetric-matrix helpers: eigen-decompositions, log-determinants,
//! Loewner-order checks and range/null-space factors.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// `(A + A^T) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest entry of `|A - A^T|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs_entry(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Eigen-decomposition of the symmetric part of `a`, eigenvalues ascending.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = symmetrize(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eigen(a);
    vals.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Spectral radius of the symmetric part.
pub fn spectral_scale(a: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eigen(a);
    vals.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `V f(Lambda) V^T` for the symmetric part of `a`.
pub fn map_eigenvalues(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(a);
    let mapped = DMatrix::from_diagonal(&vals.map(f));
    symmetrize(&(&vecs * mapped * vecs.transpose()))
}

/// Eigenvalue clipping to `[lo, hi]`: the Frobenius projection onto
/// `{X : lo I <= X <= hi I}`.
pub fn clip_eigenvalues(a: &DMatrix<f64>, lo: f64, hi: f64) -> DMatrix<f64> {
    map_eigenvalues(a, |x| x.clamp(lo, hi))
}

/// Square root of a PSD matrix; negative eigenvalues are clipped to zero.
pub fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    map_eigenvalues(a, |x| x.max(0.0).sqrt())
}

/// Inverse of a symmetric positive-definite matrix through its
/// eigen-decomposition.
pub fn inv_sym_eig(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(a);
    let scale = vals.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > scale * 1e-14) {
        return Err(Error::NonPositiveResult(min));
    }
    let inv = DMatrix::from_diagonal(&vals.map(|x| 1.0 / x));
    Ok(symmetrize(&(&vecs * inv * vecs.transpose())))
}

/// `ln det A` for positive-definite `A` via Cholesky.
pub fn logdet_pd(a: &DMatrix<f64>) -> Option<f64> {
    if a.nrows() == 0 {
        return Some(0.0);
    }
    let chol = symmetrize(a).cholesky()?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].ln();
    }
    Some(2.0 * acc)
}

/// `(ln det A, A^{-1})` for positive-definite `A`.
pub fn logdet_and_inverse(a: &DMatrix<f64>) -> Option<(f64, DMatrix<f64>)> {
    let chol = symmetrize(a).cholesky()?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].ln();
    }
    let inv = symmetrize(&chol.inverse());
    Some((2.0 * acc, inv))
}

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `<A, B> = tr(A^T B)`.
pub fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Minimum eigenvalue of `upper - lower`; nonnegative iff `lower <= upper`.
pub fn loewner_slack(lower: &DMatrix<f64>, upper: &DMatrix<f64>) -> f64 {
    min_eigenvalue(&(upper - lower))
}

/// `lower <= upper` in the Loewner order with a tolerance relative to the
/// larger spectral radius of the two.
pub fn loewner_leq(lower: &DMatrix<f64>, upper: &DMatrix<f64>, rel_tol: f64) -> bool {
    let scale = spectral_scale(lower).max(spectral_scale(upper));
    loewner_slack(lower, upper) >= -rel_tol * scale
}

/// Thin factor of a PSD matrix restricted to its range.
///
/// `S = F F^T` with `F = V_r Lambda_r^{1/2}` (`t x r`) and the left inverse
/// `F^+ = Lambda_r^{-1/2} V_r^T`, where `r` counts the eigenvalues above
/// `rel_tol * lambda_max`.
#[derive(Debug, Clone)]
pub struct RangeFactor {
    pub factor: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
}

impl RangeFactor {
    pub fn new(s: &DMatrix<f64>, rel_tol: f64) -> Self {
        let t = s.nrows();
        let (vals, vecs) = sym_eigen(s);
        let top = vals.iter().fold(0.0_f64, |m, x| m.max(*x));
        let keep: Vec<usize> = (0..t).filter(|&i| top > 0.0 && vals[i] > rel_tol * top).collect();
        let r = keep.len();
        let mut factor = DMatrix::zeros(t, r);
        let mut pinv = DMatrix::zeros(r, t);
        for (c, &i) in keep.iter().enumerate() {
            let root = vals[i].sqrt();
            factor.set_column(c, &(vecs.column(i) * root));
            pinv.set_row(c, &(vecs.column(i).transpose() / root));
        }
        Self { factor, pinv }
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// `K = F Q F^T`.
    pub fn to_ambient(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.factor * q * self.factor.transpose()))
    }

    /// `Q = F^+ K F^{+T}`.
    pub fn to_range(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.pinv * k * self.pinv.transpose()))
    }

    /// Pulls an ambient gradient back to range coordinates: `F^T G F`.
    pub fn pull_back(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(self.factor.transpose() * g * &self.factor))
    }
}

/// Orthonormal basis (columns) of the eigenvectors of `a` whose eigenvalues
/// are at most `abs_tol`.
pub fn null_space_basis(a: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let (vals, vecs) = sym_eigen(a);
    let cols: Vec<usize> = (0..n).filter(|&i| vals[i] <= abs_tol).collect();
    let mut basis = DMatrix::zeros(n, cols.len());
    for (c, &i) in cols.iter().enumerate() {
        basis.set_column(c, &vecs.column(i));
    }
    basis
}

/// Builds a dense matrix from row slices; all rows must have equal length.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

/// Symmetric block-diagonal `diag(a, c I_extra)`.
pub fn block_diag_scaled_identity(a: &DMatrix<f64>, c: f64, extra: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n + extra, n + extra);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    for i in n..n + extra {
        out[(i, i)] = c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigenvalues_sorted_ascending() {
        let a = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let (vals, _) = sym_eigen(&a);
        assert_eq!(vals.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn logdet_matches_product_of_eigenvalues() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let det: f64 = 2.0 * 1.0 - 0.25;
        assert_relative_eq!(logdet_pd(&a).unwrap(), det.ln(), epsilon = 1e-14);
        assert!(logdet_pd(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_none());
    }

    #[test]
    fn range_factor_roundtrip_on_singular_matrix() {
        let v = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let s = &v * v.transpose();
        let rf = RangeFactor::new(&s, 1e-12);
        assert_eq!(rf.rank(), 1);
        assert_relative_eq!(rf.to_ambient(&DMatrix::identity(1, 1)), s, epsilon = 1e-12);
        let q = rf.to_range(&(&s * 0.25));
        assert_relative_eq!(q[(0, 0)], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn loewner_order_on_diagonals() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 2.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 3.0]));
        assert!(loewner_leq(&a, &b, 1e-9));
        assert!(!loewner_leq(&b, &a, 1e-9));
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let n = null_space_basis(&a, 1e-12);
        assert_eq!(n.ncols(), 1);
        assert_relative_eq!(n[(1, 0)].abs(), 1.0, epsilon = 1e-14);
    }
}
