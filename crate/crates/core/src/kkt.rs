//! First-order (KKT) certificates for maximizers of the weighted boundary
//! problem.
//!
//! For `K*` and multipliers `(lambda, beta_Y, beta_Z)` the stationarity
//! condition reads
//!
//! `(c - beta_Y) A_Y + M = (c + beta_Z) A_Z + M_S`, `c = mu_s - mu_p lambda`,
//!
//! with `A = H^T (H K* H^T + Sigma)^{-1} H` (`(K* + Sigma)^{-1}` for aligned
//! channels), `M >= 0` supported on the null space of `K*` and `M_S >= 0` on
//! the null space of `S - K*`. When `mu_s < mu_p` the confidential weight is
//! replaced by `mu_p`, matching the objective the solver maximizes.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::WiretapChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::psd::PsdMatrix;
use crate::rates::{self, RateEvaluator};
use crate::tol::{CASE_TOL, NUM_TOL, PSD_ORDER_TOL, RANK_TOL};

/// Which branch of the `lambda` rule applies at `K*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaCase {
    /// `R_0Y(K*) > R_0Z(K*)`: `lambda = 0`.
    Zero,
    /// `R_0Y(K*) < R_0Z(K*)`: `lambda = 1`.
    One,
    /// `R_0Y(K*) = R_0Z(K*)`: `lambda` free in `[0, 1]`.
    Tie,
}

/// Which common-rate constraints are active at `K*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaCase {
    /// `R_0* < min{R_0Y, R_0Z}`: `beta_Y = beta_Z = 0`.
    Inactive,
    /// `R_0* = R_0Z < R_0Y`: `beta_Y = 0`.
    ZActive,
    /// `R_0* = R_0Y < R_0Z`: `beta_Z = 0`.
    YActive,
    /// `R_0* = R_0Y = R_0Z`.
    BothActive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseTag {
    pub lambda: LambdaCase,
    pub beta: BetaCase,
}

impl CaseTag {
    /// Case implied by the rates at `K*`, comparing within `CASE_TOL`.
    pub fn classify(r0y: f64, r0z: f64, r0_star: f64) -> Self {
        let lambda = if r0y - r0z > CASE_TOL {
            LambdaCase::Zero
        } else if r0z - r0y > CASE_TOL {
            LambdaCase::One
        } else {
            LambdaCase::Tie
        };
        let y_active = r0y - r0_star <= CASE_TOL;
        let z_active = r0z - r0_star <= CASE_TOL;
        let beta = match (y_active, z_active) {
            (false, false) => BetaCase::Inactive,
            (false, true) => BetaCase::ZActive,
            (true, false) => BetaCase::YActive,
            (true, true) => BetaCase::BothActive,
        };
        Self { lambda, beta }
    }

    fn beta_free(&self) -> [bool; 2] {
        match self.beta {
            BetaCase::Inactive => [false, false],
            BetaCase::ZActive => [false, true],
            BetaCase::YActive => [true, false],
            BetaCase::BothActive => [true, true],
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lambda = match self.lambda {
            LambdaCase::Zero => "lambda=0",
            LambdaCase::One => "lambda=1",
            LambdaCase::Tie => "lambda=free",
        };
        let beta = match self.beta {
            BetaCase::Inactive => "beta=(0,0)",
            BetaCase::ZActive => "beta=(0,+)",
            BetaCase::YActive => "beta=(+,0)",
            BetaCase::BothActive => "beta=(+,+)",
        };
        write!(f, "{lambda};{beta}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate {
    pub k_star: PsdMatrix,
    pub s: PsdMatrix,
    pub mu_p: f64,
    pub mu_s: f64,
    /// `max(mu_s, mu_p)`, the weight used in the stationarity condition.
    pub mu_s_effective: f64,
    pub r0_star: f64,
    pub r0y: f64,
    pub r0z: f64,
    pub lambda: f64,
    pub beta_y: f64,
    pub beta_z: f64,
    pub m: PsdMatrix,
    pub m_s: PsdMatrix,
    pub residual_stationarity: f64,
    pub residual_compl_m: f64,
    pub residual_compl_ms: f64,
    pub case_tag: CaseTag,
}

impl KktCertificate {
    /// `mu_s_eff - mu_p lambda`.
    pub fn c(&self) -> f64 {
        self.mu_s_effective - self.mu_p * self.lambda
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_stationarity.max(self.residual_compl_m).max(self.residual_compl_ms)
    }
}

/// Orthonormal basis of `range(S)`, and for a matrix `X` in the interval the
/// null space of `X` within that range.
struct RangeBasis {
    vr: DMatrix<f64>,
}

impl RangeBasis {
    fn new(s: &DMatrix<f64>) -> Self {
        let (vals, vecs) = linalg::sym_eigen(s);
        let top = vals.iter().fold(0.0_f64, |m, x| m.max(*x));
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| top > 0.0 && vals[i] > RANK_TOL * top).collect();
        let mut vr = DMatrix::zeros(s.nrows(), keep.len());
        for (c, &i) in keep.iter().enumerate() {
            vr.set_column(c, &vecs.column(i));
        }
        Self { vr }
    }

    fn null_within(&self, x: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
        let inner = self.vr.transpose() * x * &self.vr;
        &self.vr * linalg::null_space_basis(&inner, RANK_TOL * scale)
    }

    fn restrict(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let p = &self.vr * self.vr.transpose();
        &p * r * &p
    }
}

/// Fixed data of the least-squares fit at one `K*`.
struct FitData {
    a_y: DMatrix<f64>,
    a_z: DMatrix<f64>,
    v0: DMatrix<f64>,
    w0: DMatrix<f64>,
    range: RangeBasis,
}

#[derive(Debug, Clone)]
struct Fit {
    beta: [f64; 2],
    m: DMatrix<f64>,
    m_s: DMatrix<f64>,
    residual: f64,
}

fn sym_basis(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect()
}

fn embed(v: &DMatrix<f64>, a: usize, b: usize) -> DMatrix<f64> {
    let ca = v.column(a);
    let cb = v.column(b);
    if a == b {
        ca * ca.transpose()
    } else {
        ca * cb.transpose() + cb * ca.transpose()
    }
}

fn psd_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    linalg::map_eigenvalues(a, |x| x.max(0.0))
}

impl FitData {
    fn stationarity(&self, c: f64, beta: [f64; 2], m: &DMatrix<f64>, m_s: &DMatrix<f64>) -> DMatrix<f64> {
        self.range.restrict(&(&self.a_y * (c - beta[0]) + m - &self.a_z * (c + beta[1]) - m_s))
    }

    /// Least squares over the free multipliers and the slack blocks, with
    /// the nonnegativity constraints enforced by clipping and refitting.
    fn fit(&self, c: f64, free: [bool; 2]) -> Fit {
        let mut free = free;
        let mut fixed_m: Option<DMatrix<f64>> = None;
        let mut fixed_ms: Option<DMatrix<f64>> = None;
        let mut best: Option<Fit> = None;
        for round in 0..4 {
            let fit = self.solve_ls(c, free, fixed_m.as_ref(), fixed_ms.as_ref());
            let mut again = false;
            for i in 0..2 {
                if free[i] && fit.beta[i] < 0.0 {
                    free[i] = false;
                    again = true;
                }
            }
            if again {
                continue;
            }
            let m = psd_part(&fit.m);
            let m_s = psd_part(&fit.m_s);
            let residual = linalg::frobenius(&self.stationarity(c, fit.beta, &m, &m_s));
            let clipped = Fit { beta: fit.beta, m: m.clone(), m_s: m_s.clone(), residual };
            if best.as_ref().is_none_or(|b| clipped.residual < b.residual) {
                best = Some(clipped);
            }
            // Alternate: hold one clipped slack and refit the other.
            if round % 2 == 0 {
                fixed_m = Some(m);
                fixed_ms = None;
            } else {
                fixed_ms = Some(m_s);
                fixed_m = None;
            }
        }
        best.unwrap_or_else(|| {
            let zero = DMatrix::zeros(self.a_y.nrows(), self.a_y.ncols());
            let residual = linalg::frobenius(&self.stationarity(c, [0.0, 0.0], &zero, &zero));
            Fit { beta: [0.0, 0.0], m: zero.clone(), m_s: zero, residual }
        })
    }

    fn solve_ls(
        &self,
        c: f64,
        free: [bool; 2],
        fixed_m: Option<&DMatrix<f64>>,
        fixed_ms: Option<&DMatrix<f64>>,
    ) -> Fit {
        let t = self.a_y.nrows();
        let zero = DMatrix::zeros(t, t);
        let m0 = fixed_m.cloned().unwrap_or_else(|| zero.clone());
        let ms0 = fixed_ms.cloned().unwrap_or_else(|| zero.clone());
        let r0 = self.stationarity(c, [0.0, 0.0], &m0, &ms0);
        let mut columns: Vec<DMatrix<f64>> = Vec::new();
        if free[0] {
            columns.push(self.range.restrict(&-&self.a_y));
        }
        if free[1] {
            columns.push(self.range.restrict(&-&self.a_z));
        }
        let n_basis = sym_basis(self.v0.ncols());
        let p_basis = sym_basis(self.w0.ncols());
        if fixed_m.is_none() {
            columns.extend(n_basis.iter().map(|&(a, b)| self.range.restrict(&embed(&self.v0, a, b))));
        }
        if fixed_ms.is_none() {
            columns.extend(p_basis.iter().map(|&(a, b)| self.range.restrict(&-embed(&self.w0, a, b))));
        }
        let mut beta = [0.0, 0.0];
        let mut m = m0;
        let mut m_s = ms0;
        if !columns.is_empty() {
            let design = DMatrix::from_fn(t * t, columns.len(), |i, j| columns[j][i]);
            let rhs = DVector::from_iterator(t * t, r0.iter().map(|x| -x));
            let svd = design.svd(true, true);
            let scale = svd.singular_values.iter().fold(0.0_f64, |a, x| a.max(*x));
            let theta = svd
                .solve(&rhs, scale * 1e-12)
                .unwrap_or_else(|_| DVector::zeros(columns.len()));
            let mut j = 0;
            for i in 0..2 {
                if free[i] {
                    beta[i] = theta[j];
                    j += 1;
                }
            }
            if fixed_m.is_none() {
                for &(a, b) in &n_basis {
                    m += embed(&self.v0, a, b) * theta[j];
                    j += 1;
                }
            }
            if fixed_ms.is_none() {
                for &(a, b) in &p_basis {
                    m_s += embed(&self.w0, a, b) * theta[j];
                    j += 1;
                }
            }
        }
        let residual = linalg::frobenius(&self.stationarity(c, beta, &m, &m_s));
        Fit { beta, m, m_s, residual }
    }

    /// Fit preferring zero multipliers: if the slack matrices alone already
    /// satisfy stationarity, the free `beta`s are left at zero.
    fn fit_preferring_zero(&self, c: f64, free: [bool; 2]) -> Fit {
        let plain = self.fit(c, [false, false]);
        if !free.contains(&true) {
            return plain;
        }
        let scale = linalg::frobenius(&self.a_y).max(linalg::frobenius(&self.a_z)) * c.abs().max(1.0);
        if plain.residual <= 1e-10 * scale {
            return plain;
        }
        let with_beta = self.fit(c, free);
        if with_beta.residual < plain.residual {
            with_beta
        } else {
            plain
        }
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = 0.5 * (num_traits::Float::sqrt(5.0_f64) - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..iters {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb {
        a
    } else {
        b
    }
}

/// Builds a certificate for `K*` by fitting multipliers and slack matrices
/// to the stationarity condition; a large residual is the diagnostic.
pub fn build_certificate(
    k_star: &PsdMatrix,
    ch: &WiretapChannel,
    s: &PsdMatrix,
    mu_p: f64,
    mu_s: f64,
    r0_star: f64,
) -> Result<KktCertificate> {
    ch.validate()?;
    if k_star.dim() != ch.transmit_dim() || s.dim() != ch.transmit_dim() {
        return Err(Error::DimensionMismatch(format!(
            "K* is {0}x{0}, S is {1}x{1}, channel has {2} inputs",
            k_star.dim(),
            s.dim(),
            ch.transmit_dim()
        )));
    }
    k_star.check_interval(s)?;
    if !(mu_p >= 0.0 && mu_s >= 0.0) {
        return Err(Error::InvalidParameter("weights must be >= 0".into()));
    }
    let ev = RateEvaluator::new(ch, s)?;
    let (point, grad) = ev
        .eval_with_grad(k_star)
        .ok_or(Error::NotPositiveSemidefinite(k_star.min_eigenvalue()))?;
    let (r0y, r0z) = (point.rate_0y(), point.rate_0z());
    let case_tag = CaseTag::classify(r0y, r0z, r0_star);
    let scale = linalg::spectral_scale(s).max(NUM_TOL);
    let range = RangeBasis::new(s);
    let v0 = range.null_within(k_star, scale);
    let w0 = range.null_within(&(s.as_matrix() - k_star.as_matrix()), scale);
    let data = FitData { a_y: grad.c_y * 2.0, a_z: grad.c_z * 2.0, v0, w0, range };
    let mu_s_effective = mu_s.max(mu_p);
    let free = case_tag.beta_free();
    let fit_at = |lambda: f64| data.fit_preferring_zero(mu_s_effective - mu_p * lambda, free);
    let lambda = match case_tag.lambda {
        LambdaCase::Zero => 0.0,
        LambdaCase::One => 1.0,
        LambdaCase::Tie if mu_p == 0.0 => 0.5,
        LambdaCase::Tie => {
            let grid_best = (0..=100)
                .map(|i| i as f64 / 100.0)
                .map(|l| (l, fit_at(l).residual))
                .fold((0.0, f64::INFINITY), |acc, (l, r)| if r < acc.1 { (l, r) } else { acc });
            let lo = (grid_best.0 - 0.01).max(0.0);
            let hi = (grid_best.0 + 0.01).min(1.0);
            let refined = golden_section(|l| fit_at(l).residual, lo, hi, 60);
            if fit_at(refined).residual <= grid_best.1 {
                refined
            } else {
                grid_best.0
            }
        }
    };
    let fit = fit_at(lambda);
    let compl_m = linalg::frobenius(&(k_star.as_matrix() * &fit.m));
    let compl_ms = linalg::frobenius(&((s.as_matrix() - k_star.as_matrix()) * &fit.m_s));
    Ok(KktCertificate {
        k_star: k_star.clone(),
        s: s.clone(),
        mu_p,
        mu_s,
        mu_s_effective,
        r0_star,
        r0y,
        r0z,
        lambda,
        beta_y: fit.beta[0],
        beta_z: fit.beta[1],
        m: PsdMatrix::new_unchecked(fit.m),
        m_s: PsdMatrix::new_unchecked(fit.m_s),
        residual_stationarity: fit.residual,
        residual_compl_m: compl_m,
        residual_compl_ms: compl_ms,
        case_tag,
    })
}

/// Certificate for a solver output.
pub fn certify_point(ch: &WiretapChannel, point: &crate::solver::BoundaryPoint) -> Result<KktCertificate> {
    build_certificate(point.k_opt(), ch, &point.s, point.mu_p, point.mu_s, point.r0_star)
}

/// Recomputes the stationarity residual of `cert` on `ch`, independently of
/// the stored value.
pub fn stationarity_residual(cert: &KktCertificate, ch: &WiretapChannel) -> Result<f64> {
    let ev = RateEvaluator::new(ch, &cert.s)?;
    let (_, grad) = ev
        .eval_with_grad(&cert.k_star)
        .ok_or(Error::NotPositiveSemidefinite(cert.k_star.min_eigenvalue()))?;
    let c = cert.c();
    let r = grad.c_y * (2.0 * (c - cert.beta_y)) + cert.m.as_matrix()
        - grad.c_z * (2.0 * (c + cert.beta_z))
        - cert.m_s.as_matrix();
    Ok(linalg::frobenius(&RangeBasis::new(&cert.s).restrict(&r)))
}

/// True iff the residuals are at most `tol`, the slack matrices are PSD and
/// the multipliers obey the case rules implied by the stored rates.
pub fn check_certificate(cert: &KktCertificate, tol: f64) -> bool {
    let finite = [cert.lambda, cert.beta_y, cert.beta_z, cert.residual_stationarity]
        .iter()
        .all(|x| x.is_finite());
    if !finite || cert.max_residual() > tol {
        return false;
    }
    let psd = |m: &PsdMatrix| m.min_eigenvalue() >= -PSD_ORDER_TOL * linalg::spectral_scale(m).max(1.0);
    if !psd(&cert.m) || !psd(&cert.m_s) {
        return false;
    }
    if !(0.0..=1.0).contains(&cert.lambda) || cert.beta_y < 0.0 || cert.beta_z < 0.0 {
        return false;
    }
    let implied = CaseTag::classify(cert.r0y, cert.r0z, cert.r0_star);
    if implied != cert.case_tag {
        return false;
    }
    let lambda_ok = match implied.lambda {
        // With mu_p = 0 lambda does not enter the condition.
        _ if cert.mu_p == 0.0 => true,
        LambdaCase::Zero => cert.lambda.abs() <= tol,
        LambdaCase::One => (cert.lambda - 1.0).abs() <= tol,
        LambdaCase::Tie => true,
    };
    let [y_free, z_free] = implied.beta_free();
    let beta_ok = (y_free || cert.beta_y <= tol) && (z_free || cert.beta_z <= tol);
    lambda_ok && beta_ok
}

/// Convenience: rates at the certificate's `K*` on `ch`.
pub fn certificate_rates(cert: &KktCertificate, ch: &WiretapChannel) -> Result<rates::RateBundle> {
    rates::gaussian_region_rates(&cert.k_star, &cert.s, ch)
}

/// Human-readable summary used in reports.
pub fn describe(cert: &KktCertificate) -> String {
    format!(
        "{} lambda={:.6} beta_y={:.3e} beta_z={:.3e} residual={:.3e}",
        cert.case_tag,
        cert.lambda,
        cert.beta_y,
        cert.beta_z,
        cert.max_residual()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_cert() -> KktCertificate {
        let ch = WiretapChannel::scalar(1.0, 2.0).unwrap();
        let one = PsdMatrix::scalar(1.0).unwrap();
        build_certificate(&one, &ch, &one, 0.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn scalar_example() {
        let cert = scalar_cert();
        assert_eq!(cert.beta_y, 0.0);
        assert_eq!(cert.beta_z, 0.0);
        assert_eq!(cert.m[(0, 0)], 0.0);
        assert_relative_eq!(cert.m_s[(0, 0)], 1.0 / 6.0, epsilon = 1e-12);
        assert!(cert.residual_stationarity < 1e-12);
        assert!(check_certificate(&cert, 1e-8));
    }

    #[test]
    fn interior_point_has_no_slack() {
        let ch = WiretapChannel::scalar(1.0, 2.0).unwrap();
        let s = PsdMatrix::scalar(1.0).unwrap();
        let k = PsdMatrix::scalar(0.5).unwrap();
        let cert = build_certificate(&k, &ch, &s, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(cert.m[(0, 0)], 0.0);
        assert_eq!(cert.m_s[(0, 0)], 0.0);
        // 1/(1.5) - 1/(2.5)
        assert_relative_eq!(cert.residual_stationarity, 1.0 / 1.5 - 1.0 / 2.5, epsilon = 1e-12);
    }

    #[test]
    fn equal_noise_at_zero() {
        let sigma = PsdMatrix::from_rows(&[alloc::vec![1.0, 0.2], alloc::vec![0.2, 0.8]]).unwrap();
        let ch = WiretapChannel::aligned(sigma.clone(), sigma);
        let s = PsdMatrix::identity(2);
        let cert = build_certificate(&PsdMatrix::zeros(2), &ch, &s, 0.0, 1.0, 0.0).unwrap();
        assert!(cert.residual_stationarity < 1e-12);
        assert!(linalg::frobenius(&cert.m) < 1e-12 && linalg::frobenius(&cert.m_s) < 1e-12);
    }

    #[test]
    fn case_rule_violations_rejected() {
        let mut cert = scalar_cert();
        cert.r0_star = 0.0;
        cert.r0y = 0.2;
        cert.r0z = 0.1;
        cert.case_tag = CaseTag::classify(cert.r0y, cert.r0z, cert.r0_star);
        cert.beta_y = 0.5;
        assert!(!check_certificate(&cert, 1e-8));
        cert.beta_y = 0.0;
        cert.mu_p = 1.0;
        cert.lambda = 0.5;
        assert!(!check_certificate(&cert, 1e-8));
        cert.lambda = 0.0;
        assert!(check_certificate(&cert, 1e-8));
    }

    #[test]
    fn stored_residual_matches_recomputation() {
        let ch = WiretapChannel::scalar(1.0, 2.0).unwrap();
        let cert = scalar_cert();
        assert!(stationarity_residual(&cert, &ch).unwrap() < 1e-12);
    }
}
