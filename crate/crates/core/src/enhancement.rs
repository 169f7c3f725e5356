//! Enhanced noise covariances built from KKT certificates, and numerical
//! checks of the inequalities they are used for.
//!
//! Given a maximizer `K*` with multipliers, a slack matrix `M` (supported on
//! the null space of `K*`) or `M_S` (on the null space of `S - K*`) is folded
//! into one of the noise covariances:
//!
//! `scale (K* + Sigma~)^{-1} = scale (K* + Sigma)^{-1} + slack`.
//!
//! The result is a less noisy channel that agrees with the original one on
//! the quantities that matter at `K*`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::WiretapChannel;
use crate::error::{Error, Result};
use crate::kkt::{BetaCase, KktCertificate};
use crate::linalg;
use crate::psd::PsdMatrix;
use crate::tol::{ENH_TOL, PD_TOL};

/// Which receiver's noise was enhanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnhancementSource {
    EnhanceZ,
    EnhanceY,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancedChannel {
    pub sigma_tilde: PsdMatrix,
    pub source: EnhancementSource,
    /// Scalar multiplying both inverses in the construction.
    pub scale: f64,
}

/// `Sigma~ = [(K* + Sigma)^{-1} + slack / scale]^{-1} - K*`, symmetrized.
pub fn enhance(
    k_star: &PsdMatrix,
    sigma: &PsdMatrix,
    slack: &PsdMatrix,
    scale: f64,
    source: EnhancementSource,
) -> Result<EnhancedChannel> {
    let n = k_star.dim();
    if sigma.dim() != n || slack.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "K* is {n}x{n}, Sigma {0}x{0}, slack {1}x{1}",
            sigma.dim(),
            slack.dim()
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("enhancement scale must be positive, got {scale}")));
    }
    let base = linalg::inv_sym_eig(&(k_star.as_matrix() + sigma.as_matrix()))?;
    let inner = base + slack.as_matrix() / scale;
    let tilde = linalg::symmetrize(&(linalg::inv_sym_eig(&inner)? - k_star.as_matrix()));
    let (vals, _) = linalg::sym_eigen(&tilde);
    let top = vals.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > PD_TOL * top) {
        return Err(Error::NonPositiveResult(min));
    }
    Ok(EnhancedChannel { sigma_tilde: PsdMatrix::new_unchecked(tilde), source, scale })
}

/// One named residual with its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Residual {
    fn new(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tol, pass: value <= tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancementReport {
    pub residuals: Vec<Residual>,
    pub passed: bool,
}

impl EnhancementReport {
    fn from_residuals(residuals: Vec<Residual>) -> Self {
        let passed = residuals.iter().all(|r| r.pass);
        Self { residuals, passed }
    }

    pub fn get(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0_f64, |m, r| m.max(r.value))
    }
}

/// Amount by which `lower <= upper` fails: `max(0, -lambda_min(upper - lower))`.
fn order_violation(lower: &DMatrix<f64>, upper: &DMatrix<f64>) -> f64 {
    (-linalg::loewner_slack(lower, upper)).max(0.0)
}

fn inv(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::inv_sym_eig(a)
}

fn half_logdet_ratio(num: &DMatrix<f64>, den: &DMatrix<f64>) -> Result<f64> {
    let a = linalg::logdet_pd(num).ok_or(Error::NonPositiveResult(linalg::min_eigenvalue(num)))?;
    let b = linalg::logdet_pd(den).ok_or(Error::NonPositiveResult(linalg::min_eigenvalue(den)))?;
    Ok(0.5 * (a - b))
}

fn check_dims(n: usize, mats: &[&PsdMatrix]) -> Result<()> {
    if let Some(m) = mats.iter().find(|m| m.dim() != n) {
        return Err(Error::DimensionMismatch(format!("expected {n}x{n}, got {0}x{0}", m.dim())));
    }
    Ok(())
}

/// Properties of an enhanced eavesdropper noise `Sigma_Z~` in the case where
/// neither common-rate constraint binds: `Sigma_Z~ <= Sigma_Z`,
/// `Sigma_Z~ <= Sigma_Y`, `(K*+Sigma_Z~)^{-1}(S+Sigma_Z~) =
/// (K*+Sigma_Z)^{-1}(S+Sigma_Z)`, and the implied `R_0Z(K*) >= R_0Y(K*)`.
pub fn verify_enhancement_z(
    k_star: &PsdMatrix,
    s: &PsdMatrix,
    sigma_y: &PsdMatrix,
    sigma_z: &PsdMatrix,
    sigma_tilde_z: &PsdMatrix,
    tol: f64,
) -> Result<EnhancementReport> {
    check_dims(k_star.dim(), &[s, sigma_y, sigma_z, sigma_tilde_z])?;
    let k = k_star.as_matrix();
    let st = sigma_tilde_z.as_matrix();
    let lhs = inv(&(k + st))? * (s.as_matrix() + st);
    let rhs = inv(&(k + sigma_z.as_matrix()))? * (s.as_matrix() + sigma_z.as_matrix());
    let r0y = half_logdet_ratio(&(s.as_matrix() + sigma_y.as_matrix()), &(k + sigma_y.as_matrix()))?;
    let r0z = half_logdet_ratio(&(s.as_matrix() + sigma_z.as_matrix()), &(k + sigma_z.as_matrix()))?;
    Ok(EnhancementReport::from_residuals(vec![
        Residual::new("tilde_le_sigma_z", order_violation(st, sigma_z), tol),
        Residual::new("tilde_le_sigma_y", order_violation(st, sigma_y), tol),
        Residual::new("product_identity", linalg::frobenius(&(lhs - rhs)), tol),
        Residual::new("r0z_ge_r0y", (r0y - r0z).max(0.0), tol),
    ]))
}

/// Properties of an enhanced legitimate noise `Sigma_Y~`:
/// `Sigma_Y~ <= Sigma_Y`, `Sigma_Y~ <= Sigma_Z` and
/// `(K*+Sigma_Y~)^{-1} Sigma_Y~ = (K*+Sigma_Y)^{-1} Sigma_Y`.
pub fn verify_enhancement_y(
    k_star: &PsdMatrix,
    sigma_y: &PsdMatrix,
    sigma_z: &PsdMatrix,
    sigma_tilde_y: &PsdMatrix,
    tol: f64,
) -> Result<EnhancementReport> {
    check_dims(k_star.dim(), &[sigma_y, sigma_z, sigma_tilde_y])?;
    let k = k_star.as_matrix();
    let st = sigma_tilde_y.as_matrix();
    let lhs = inv(&(k + st))? * st;
    let rhs = inv(&(k + sigma_y.as_matrix()))? * sigma_y.as_matrix();
    Ok(EnhancementReport::from_residuals(vec![
        Residual::new("tilde_le_sigma_y", order_violation(st, sigma_y), tol),
        Residual::new("tilde_le_sigma_z", order_violation(st, sigma_z), tol),
        Residual::new("product_identity", linalg::frobenius(&(lhs - rhs)), tol),
    ]))
}

/// Which common-rate constraint shapes the enhancement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnhancementCase {
    /// `R_0* < min{R_0Y, R_0Z}`: enhance the eavesdropper with `M_S`.
    Unconstrained,
    /// `R_0* = R_0Y <= R_0Z`: enhance the legitimate receiver with `M`.
    CommonRateY,
    /// `R_0* = R_0Z < R_0Y`: enhance the legitimate receiver with `M`, scale
    /// `mu_s`.
    CommonRateZ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedEnhancement {
    pub case: EnhancementCase,
    pub enhanced: EnhancedChannel,
    /// Loewner and product-identity residuals plus the consistency of the
    /// enhanced covariance with the stationarity condition.
    pub report: EnhancementReport,
}

/// Builds the enhancement that matches the certificate's case and checks
/// its properties at tolerance `tol`.
///
/// Returns `Ok(None)` when no enhancement applies: `mu_s <= mu_p` (the
/// construction is only used for a confidential message worth more than a
/// public one) or a nonpositive scale.
pub fn enhance_certificate(
    cert: &KktCertificate,
    ch: &WiretapChannel,
    tol: f64,
) -> Result<Option<CertifiedEnhancement>> {
    if !ch.is_aligned() {
        return Err(Error::InvalidParameter("enhancement needs an aligned channel".into()));
    }
    if cert.mu_s <= cert.mu_p {
        return Ok(None);
    }
    let k = &cert.k_star;
    let (sy, sz) = (&ch.sigma_y, &ch.sigma_z);
    // The case follows the fitted multipliers: a tie in the common rates
    // whose fit needs no beta is handled like an inactive constraint.
    let case = if cert.beta_y == 0.0 && cert.beta_z == 0.0 {
        EnhancementCase::Unconstrained
    } else if cert.case_tag.beta == BetaCase::ZActive {
        EnhancementCase::CommonRateZ
    } else {
        EnhancementCase::CommonRateY
    };
    let scale = match case {
        EnhancementCase::CommonRateZ => cert.mu_s,
        _ => cert.c(),
    };
    if !(scale > 0.0) {
        return Ok(None);
    }
    let km = k.as_matrix();
    let out = match case {
        EnhancementCase::Unconstrained => {
            let e = enhance(k, sz, &cert.m_s, scale, EnhancementSource::EnhanceZ)?;
            let mut report = verify_enhancement_z(k, &cert.s, sy, sz, &e.sigma_tilde, tol)?;
            // Folding M_S into Sigma_Z turns stationarity into
            // scale (K*+Sigma_Z~)^{-1} = scale (K*+Sigma_Y)^{-1} + M.
            let lhs = inv(&(km + e.sigma_tilde.as_matrix()))? * scale;
            let rhs = inv(&(km + sy.as_matrix()))? * scale + cert.m.as_matrix();
            report.residuals.push(Residual::new("stationarity_after", linalg::frobenius(&(lhs - rhs)), tol));
            CertifiedEnhancement { case, enhanced: e, report: EnhancementReport::from_residuals(report.residuals) }
        }
        EnhancementCase::CommonRateY | EnhancementCase::CommonRateZ => {
            let e = enhance(k, sy, &cert.m, scale, EnhancementSource::EnhanceY)?;
            let mut report = verify_enhancement_y(k, sy, sz, &e.sigma_tilde, tol)?;
            if case == EnhancementCase::CommonRateZ {
                // mu_s (K*+Sigma_Y~)^{-1} = (mu_s + beta_Z)(K*+Sigma_Z)^{-1} + M_S.
                let lhs = inv(&(km + e.sigma_tilde.as_matrix()))? * scale;
                let rhs = inv(&(km + sz.as_matrix()))? * (scale + cert.beta_z) + cert.m_s.as_matrix();
                report.residuals.push(Residual::new("stationarity_after", linalg::frobenius(&(lhs - rhs)), tol));
            }
            CertifiedEnhancement { case, enhanced: e, report: EnhancementReport::from_residuals(report.residuals) }
        }
    };
    Ok(Some(out))
}

/// Outcome of [`check_extremal_inequality`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalReport {
    /// `||nu (K*+S1)^{-1} - gamma (K*+S2)^{-1} - M_S||_F`.
    pub hypothesis_residual: f64,
    /// `||(S - K*) M_S||_F`.
    pub support_residual: f64,
    /// Right-hand side: the Gaussian value at `Q = K*`.
    pub rhs: f64,
    /// Largest `LHS(Q) - RHS` over the test set.
    pub max_excess: f64,
    /// Index of the test covariance attaining `max_excess`.
    pub argmax: usize,
    /// `|LHS(K*) - RHS|`, recomputed through the same code path as the test
    /// set.
    pub gap_at_k_star: f64,
    pub samples: usize,
    pub tol: f64,
    pub holds: bool,
}

/// `nu/2 ln|2 pi e (Q + S1)| - gamma/2 ln|2 pi e (Q + S2)|`.
fn extremal_lhs(q: &DMatrix<f64>, s1: &DMatrix<f64>, s2: &DMatrix<f64>, nu: f64, gamma: f64) -> Result<f64> {
    let n = q.nrows() as f64;
    let c = (2.0 * core::f64::consts::PI * core::f64::consts::E).ln() * n;
    let a = linalg::logdet_pd(&(q + s1)).ok_or(Error::NonPositiveResult(linalg::min_eigenvalue(&(q + s1))))?;
    let b = linalg::logdet_pd(&(q + s2)).ok_or(Error::NonPositiveResult(linalg::min_eigenvalue(&(q + s2))))?;
    Ok(0.5 * nu * (a + c) - 0.5 * gamma * (b + c))
}

/// Checks the extremal inequality
/// `nu h(X+N1|U) - gamma h(X+N2|U) <= nu/2 ln|2 pi e (K*+S1)| - gamma/2 ln|2 pi e (K*+S2)|`
/// over jointly Gaussian `(U, X)`, where `Cov(X|U) = Q` ranges over
/// `test_set` (each `0 <= Q <= S`).
///
/// The hypotheses (`S` positive definite, `S1 <= S2`, `nu, gamma >= 0`,
/// `nu (K*+S1)^{-1} = gamma (K*+S2)^{-1} + M_S` with `(S - K*) M_S = 0`) are
/// checked first, at [`ENH_TOL`] relative to the size of the matrices
/// involved; if one fails the inequality is not asserted.
#[allow(clippy::too_many_arguments)]
pub fn check_extremal_inequality(
    k_star: &PsdMatrix,
    sigma_1: &PsdMatrix,
    sigma_2: &PsdMatrix,
    nu: f64,
    gamma: f64,
    m_s: &PsdMatrix,
    s: &PsdMatrix,
    test_set: &[PsdMatrix],
    tol: f64,
) -> Result<ExtremalReport> {
    check_dims(k_star.dim(), &[sigma_1, sigma_2, m_s, s])?;
    let fail = |msg: String| Err(Error::HypothesisViolated(msg));
    if !(nu >= 0.0 && gamma >= 0.0) {
        return fail(format!("nu = {nu} and gamma = {gamma} must be >= 0"));
    }
    if !s.is_positive_definite(PD_TOL) {
        return fail(format!("S must be positive definite (min eigenvalue {:e})", s.min_eigenvalue()));
    }
    let (k, s1, s2) = (k_star.as_matrix(), sigma_1.as_matrix(), sigma_2.as_matrix());
    let scale = 1.0_f64.max(linalg::spectral_scale(s1)).max(linalg::spectral_scale(s2));
    if order_violation(s1, s2) > ENH_TOL * scale {
        return fail(format!("Sigma_1 <= Sigma_2 fails by {:e}", order_violation(s1, s2)));
    }
    if order_violation(k, s.as_matrix()) > ENH_TOL * scale.max(linalg::spectral_scale(s)) {
        return fail("K* <= S fails".into());
    }
    let stat = inv(&(k + s1))? * nu - inv(&(k + s2))? * gamma - m_s.as_matrix();
    let hypothesis_residual = linalg::frobenius(&stat);
    let weight = 1.0_f64.max(nu).max(gamma).max(linalg::spectral_scale(m_s));
    if hypothesis_residual > ENH_TOL * weight {
        return fail(format!("stationarity residual {hypothesis_residual:e}"));
    }
    let support_residual = linalg::frobenius(&((s.as_matrix() - k) * m_s.as_matrix()));
    if support_residual > ENH_TOL * weight * linalg::spectral_scale(s).max(1.0) {
        return fail(format!("(S - K*) M_S = {support_residual:e}"));
    }
    let rhs = extremal_lhs(k, s1, s2, nu, gamma)?;
    let mut max_excess = f64::NEG_INFINITY;
    let mut argmax = 0;
    for (i, q) in test_set.iter().enumerate() {
        if q.dim() != k_star.dim() {
            return Err(Error::DimensionMismatch("test covariance has the wrong size".into()));
        }
        let excess = extremal_lhs(q.as_matrix(), s1, s2, nu, gamma)? - rhs;
        if excess > max_excess {
            max_excess = excess;
            argmax = i;
        }
    }
    let gap_at_k_star = (extremal_lhs(&(k * 1.0), s1, s2, nu, gamma)? - rhs).abs();
    let holds = max_excess <= tol && gap_at_k_star <= tol;
    Ok(ExtremalReport {
        hypothesis_residual,
        support_residual,
        rhs,
        max_excess,
        argmax,
        gap_at_k_star,
        samples: test_set.len(),
        tol,
        holds,
    })
}

/// `n` conditional covariances in `[0, S]`: `0`, `S`, then
/// `S^{1/2} R diag(u) R^T S^{1/2}` with a random rotation `R` and
/// `u` uniform in `[0, 1]^t`.
pub fn gaussian_test_set(s: &PsdMatrix, n: usize, seed: u64) -> Vec<PsdMatrix> {
    let t = s.dim();
    let root = linalg::psd_sqrt(s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let q = match i {
            0 => DMatrix::zeros(t, t),
            1 => s.as_matrix().clone(),
            _ => {
                let g = DMatrix::from_fn(t, t, |_, _| rng.random::<f64>() * 2.0 - 1.0);
                let r = g.qr().q();
                let u = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(t, |_, _| rng.random::<f64>()));
                &root * &r * u * r.transpose() * &root
            }
        };
        out.push(PsdMatrix::new_unchecked(q));
    }
    out
}

/// One sample of [`check_objective_rewrite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteSample {
    /// Best `(mu_p+beta_Z) R_0 + mu_p R_p + mu_s R_s` over the rate triples
    /// supported by `K`.
    pub corner: f64,
    /// `(mu_p+beta_Z) min{I(U;Y), I(U;Z)} + mu_p I(V;Z|U)
    ///  + mu_s [I(V;Y|U) - I(V;Z|U)]` for `U ~ N(0, S-K)`, `V = X = U + T`,
    /// `T ~ N(0, K)`.
    pub explicit: f64,
    /// `I(V;Y|U) - I(V;Z|U)`.
    pub secrecy: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteReport {
    pub samples: Vec<RewriteSample>,
    pub max_gap: f64,
    pub tol: f64,
    pub holds: bool,
}

/// Compares the weighted objective at the best corner of the `K`-slice of
/// the region with its mutual-information form for Gaussian `(U, V, X)`.
///
/// The two agree whenever the secrecy term is nonnegative. When it is
/// negative the corner gives up `R_s` while the explicit form still counts
/// it, so there the explicit value must stay below the corner.
pub fn check_objective_rewrite(
    ch: &WiretapChannel,
    s: &PsdMatrix,
    mu_p: f64,
    mu_s: f64,
    beta_z: f64,
    sample_points: &[PsdMatrix],
    tol: f64,
) -> Result<RewriteReport> {
    if !(mu_s > mu_p && mu_p >= 0.0) {
        return Err(Error::InvalidParameter(format!("needs mu_s > mu_p >= 0, got ({mu_p}, {mu_s})")));
    }
    if !(beta_z >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta_z must be >= 0, got {beta_z}")));
    }
    if !ch.is_aligned() {
        return Err(Error::InvalidParameter("objective rewrite needs an aligned channel".into()));
    }
    let (sy, sz) = (ch.sigma_y.as_matrix(), ch.sigma_z.as_matrix());
    let sm = s.as_matrix();
    let mut samples = Vec::with_capacity(sample_points.len());
    let mut max_gap = 0.0_f64;
    for k in sample_points {
        let b = crate::rates::gaussian_region_rates(k, s, ch)?;
        let common = b.r0y.min(b.r0z);
        // R_0 = common, R_s = [R_s(K)]^+, R_p takes the rest of C_Y(K).
        let rs = b.rs.max(0.0);
        let rp = b.rp + b.rs - rs;
        let corner = (mu_p + beta_z) * common + mu_p * rp + mu_s * rs;

        let km = k.as_matrix();
        let i_uy = half_logdet_ratio(&(sm + sy), &(km + sy))?;
        let i_uz = half_logdet_ratio(&(sm + sz), &(km + sz))?;
        let i_vy = half_logdet_ratio(&(km + sy), sy)?;
        let i_vz = half_logdet_ratio(&(km + sz), sz)?;
        let secrecy = i_vy - i_vz;
        let explicit = (mu_p + beta_z) * i_uy.min(i_uz) + mu_p * i_vz + mu_s * secrecy;

        let gap = if secrecy >= 0.0 { (corner - explicit).abs() } else { (explicit - corner).max(0.0) };
        max_gap = max_gap.max(gap);
        samples.push(RewriteSample { corner, explicit, secrecy, pass: gap <= tol });
    }
    Ok(RewriteReport { holds: samples.iter().all(|x| x.pass), samples, max_gap, tol })
}
