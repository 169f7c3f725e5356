//! Log-det rate functionals of the Gaussian region, their gradients, and the
//! mapping between the equivocation and public-message descriptions.

use alloc::format;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::WiretapChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::psd::PsdMatrix;

/// `ln |H K H^T + Sigma|`, or `None` if the argument is not positive definite.
pub fn logdet_term(h: &DMatrix<f64>, k: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Option<f64> {
    linalg::logdet_pd(&(h * k * h.transpose() + sigma))
}

/// `1/2 ln |H K H^T + Sigma| / |Sigma|`.
pub fn half_logdet_ratio(h: &DMatrix<f64>, k: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Option<f64> {
    Some(0.5 * (logdet_term(h, k, sigma)? - linalg::logdet_pd(sigma)?))
}

/// Value and gradient of `1/2 ln |H K H^T + Sigma|` with respect to `K`:
/// `1/2 H^T (H K H^T + Sigma)^{-1} H`.
pub fn half_logdet_with_grad(
    h: &DMatrix<f64>,
    k: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
) -> Option<(f64, DMatrix<f64>)> {
    let (ld, inv) = linalg::logdet_and_inverse(&(h * k * h.transpose() + sigma))?;
    let grad = linalg::symmetrize(&(h.transpose() * inv * h)) * 0.5;
    Some((0.5 * ld, grad))
}

/// The four quantities every functional is built from, at one `K`:
/// `C_Y(K)`, `C_Z(K)` and the single-user capacities at `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub c_y_k: f64,
    pub c_z_k: f64,
    pub c_y_s: f64,
    pub c_z_s: f64,
}

impl RatePoint {
    pub fn rate_s(&self) -> f64 {
        self.c_y_k - self.c_z_k
    }

    pub fn rate_p(&self) -> f64 {
        self.c_z_k
    }

    pub fn rate_0y(&self) -> f64 {
        self.c_y_s - self.c_y_k
    }

    pub fn rate_0z(&self) -> f64 {
        self.c_z_s - self.c_z_k
    }

    pub fn r0_min(&self) -> f64 {
        self.rate_0y().min(self.rate_0z())
    }
}

/// Gradients of `C_Y(K)` and `C_Z(K)` in ambient coordinates.
#[derive(Debug, Clone)]
pub struct RateGrad {
    pub c_y: DMatrix<f64>,
    pub c_z: DMatrix<f64>,
}

/// Evaluates the functionals for one channel and one upper bound `S`,
/// caching the `K`-independent log-determinants.
#[derive(Debug, Clone)]
pub struct RateEvaluator<'a> {
    ch: &'a WiretapChannel,
    ld_sigma_y: f64,
    ld_sigma_z: f64,
    c_y_s: f64,
    c_z_s: f64,
}

impl<'a> RateEvaluator<'a> {
    pub fn new(ch: &'a WiretapChannel, s: &DMatrix<f64>) -> Result<Self> {
        let ld_sigma_y = linalg::logdet_pd(&ch.sigma_y)
            .ok_or(Error::NonPositiveDefiniteNoise { which: "Sigma_Y", min_eigenvalue: ch.sigma_y.min_eigenvalue() })?;
        let ld_sigma_z = linalg::logdet_pd(&ch.sigma_z)
            .ok_or(Error::NonPositiveDefiniteNoise { which: "Sigma_Z", min_eigenvalue: ch.sigma_z.min_eigenvalue() })?;
        let c_y_s = logdet_term(&ch.h_y, s, &ch.sigma_y).ok_or(Error::NotPositiveSemidefinite(0.0))?;
        let c_z_s = logdet_term(&ch.h_z, s, &ch.sigma_z).ok_or(Error::NotPositiveSemidefinite(0.0))?;
        Ok(Self {
            ch,
            ld_sigma_y,
            ld_sigma_z,
            c_y_s: 0.5 * (c_y_s - ld_sigma_y),
            c_z_s: 0.5 * (c_z_s - ld_sigma_z),
        })
    }

    pub fn channel(&self) -> &WiretapChannel {
        self.ch
    }

    /// `(C_Y(S), C_Z(S))`.
    pub fn capacities(&self) -> (f64, f64) {
        (self.c_y_s, self.c_z_s)
    }

    /// `None` when `H K H^T + Sigma` loses definiteness (far outside `K >= 0`).
    pub fn eval(&self, k: &DMatrix<f64>) -> Option<RatePoint> {
        let ly = logdet_term(&self.ch.h_y, k, &self.ch.sigma_y)?;
        let lz = logdet_term(&self.ch.h_z, k, &self.ch.sigma_z)?;
        Some(RatePoint {
            c_y_k: 0.5 * (ly - self.ld_sigma_y),
            c_z_k: 0.5 * (lz - self.ld_sigma_z),
            c_y_s: self.c_y_s,
            c_z_s: self.c_z_s,
        })
    }

    pub fn eval_with_grad(&self, k: &DMatrix<f64>) -> Option<(RatePoint, RateGrad)> {
        let (hy, gy) = half_logdet_with_grad(&self.ch.h_y, k, &self.ch.sigma_y)?;
        let (hz, gz) = half_logdet_with_grad(&self.ch.h_z, k, &self.ch.sigma_z)?;
        let point = RatePoint {
            c_y_k: hy - 0.5 * self.ld_sigma_y,
            c_z_k: hz - 0.5 * self.ld_sigma_z,
            c_y_s: self.c_y_s,
            c_z_s: self.c_z_s,
        };
        Some((point, RateGrad { c_y: gy, c_z: gz }))
    }
}

fn check_k(k: &PsdMatrix, ch: &WiretapChannel) -> Result<()> {
    if k.dim() != ch.transmit_dim() {
        return Err(Error::DimensionMismatch(format!(
            "K is {0}x{0} but the channel has {1} inputs",
            k.dim(),
            ch.transmit_dim()
        )));
    }
    Ok(())
}

fn evaluator_at<'a>(k: &PsdMatrix, s: &PsdMatrix, ch: &'a WiretapChannel) -> Result<(RateEvaluator<'a>, RatePoint)> {
    check_k(k, ch)?;
    k.check_interval(s)?;
    let ev = RateEvaluator::new(ch, s)?;
    let point = ev.eval(k).ok_or(Error::NotPositiveSemidefinite(k.min_eigenvalue()))?;
    Ok((ev, point))
}

/// `C_Y(K) - C_Z(K)`; may be negative.
pub fn rate_s(k: &PsdMatrix, ch: &WiretapChannel) -> Result<f64> {
    check_k(k, ch)?;
    let y = half_logdet_ratio(&ch.h_y, k, &ch.sigma_y).ok_or(Error::NotPositiveSemidefinite(0.0))?;
    let z = half_logdet_ratio(&ch.h_z, k, &ch.sigma_z).ok_or(Error::NotPositiveSemidefinite(0.0))?;
    Ok(y - z)
}

/// `C_Z(K)`.
pub fn rate_p(k: &PsdMatrix, ch: &WiretapChannel) -> Result<f64> {
    check_k(k, ch)?;
    half_logdet_ratio(&ch.h_z, k, &ch.sigma_z).ok_or(Error::NotPositiveSemidefinite(0.0))
}

/// `C_Y(S) - C_Y(K)`.
pub fn rate_0y(k: &PsdMatrix, s: &PsdMatrix, ch: &WiretapChannel) -> Result<f64> {
    Ok(evaluator_at(k, s, ch)?.1.rate_0y())
}

/// `C_Z(S) - C_Z(K)`.
pub fn rate_0z(k: &PsdMatrix, s: &PsdMatrix, ch: &WiretapChannel) -> Result<f64> {
    Ok(evaluator_at(k, s, ch)?.1.rate_0z())
}

/// `(C_Y(S), C_Z(S))`. Panics only if `S` has the wrong size; an `S` that is
/// not PSD enough to keep the log-dets finite yields NaN.
pub fn single_user_capacities(ch: &WiretapChannel, s: &PsdMatrix) -> (f64, f64) {
    let y = half_logdet_ratio(&ch.h_y, s, &ch.sigma_y).unwrap_or(f64::NAN);
    let z = half_logdet_ratio(&ch.h_z, s, &ch.sigma_z).unwrap_or(f64::NAN);
    (y, z)
}

/// Corner data of the Gaussian region at `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBundle {
    pub k: PsdMatrix,
    pub rs: f64,
    pub rp: f64,
    pub r0y: f64,
    pub r0z: f64,
}

impl RateBundle {
    pub fn from_point(k: PsdMatrix, p: &RatePoint) -> Self {
        Self { k, rs: p.rate_s(), rp: p.rate_p(), r0y: p.rate_0y(), r0z: p.rate_0z() }
    }
}

pub fn gaussian_region_rates(k: &PsdMatrix, s: &PsdMatrix, ch: &WiretapChannel) -> Result<RateBundle> {
    let (_, point) = evaluator_at(k, s, ch)?;
    Ok(RateBundle::from_point(k.clone(), &point))
}

/// Rates under a trace budget: `K <- K1`, `S <- K1 + K2`.
pub fn power_region_rates(
    k1: &PsdMatrix,
    k2: &PsdMatrix,
    ch: &WiretapChannel,
    power: f64,
) -> Result<RateBundle> {
    if k1.dim() != k2.dim() {
        return Err(Error::DimensionMismatch("K1 and K2 differ in size".into()));
    }
    let trace = k1.trace() + k2.trace();
    let slack = crate::tol::PSD_ORDER_TOL * power.abs().max(1.0);
    if !(trace <= power + slack) {
        return Err(Error::PowerExceeded { trace, budget: power });
    }
    let s = PsdMatrix::new_unchecked(k1.as_matrix() + k2.as_matrix());
    gaussian_region_rates(k1, &s, ch)
}

/// `(R_0, R_1, R_e)` in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTriple {
    pub r0: f64,
    pub r1: f64,
    pub re: f64,
}

/// `(R_0, R_p, R_s)` in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublicRateTriple {
    pub r0: f64,
    pub rp: f64,
    pub rs: f64,
}

fn check_finite_nonneg(values: &[f64]) -> Result<()> {
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if values.iter().any(|x| *x < 0.0) {
        return Err(Error::InvalidTriple("rates must be nonnegative".into()));
    }
    Ok(())
}

impl RateTriple {
    pub fn new(r0: f64, r1: f64, re: f64) -> Result<Self> {
        check_finite_nonneg(&[r0, r1, re])?;
        if re > r1 {
            return Err(Error::InvalidTriple(format!("equivocation {re} exceeds private rate {r1}")));
        }
        Ok(Self { r0, r1, re })
    }

    /// `(r0, r1 - re, re)`.
    pub fn to_public(&self) -> Result<PublicRateTriple> {
        if !(self.re <= self.r1) {
            return Err(Error::InvalidTriple(format!(
                "equivocation {} exceeds private rate {}",
                self.re, self.r1
            )));
        }
        Ok(PublicRateTriple { r0: self.r0, rp: self.r1 - self.re, rs: self.re })
    }
}

impl PublicRateTriple {
    pub fn new(r0: f64, rp: f64, rs: f64) -> Result<Self> {
        check_finite_nonneg(&[r0, rp, rs])?;
        Ok(Self { r0, rp, rs })
    }

    /// `(r0, rp + rs, rs)`.
    pub fn to_equivocation(&self) -> RateTriple {
        RateTriple { r0: self.r0, r1: self.rp + self.rs, re: self.rs }
    }
}

pub fn map_public_to_equivocation(p: &PublicRateTriple) -> RateTriple {
    p.to_equivocation()
}

pub fn map_equivocation_to_public(t: &RateTriple) -> Result<PublicRateTriple> {
    t.to_public()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(x: f64) -> PsdMatrix {
        PsdMatrix::scalar(x).unwrap()
    }

    #[test]
    fn scalar_rate_s() {
        let ch = WiretapChannel::scalar(1.0, 2.0).unwrap();
        assert_eq!(rate_s(&PsdMatrix::zeros(1), &ch).unwrap(), 0.0);
        assert_relative_eq!(rate_s(&scalar(1.0), &ch).unwrap(), 0.5 * (4.0f64 / 3.0).ln(), epsilon = 1e-15);
        assert_relative_eq!(rate_s(&scalar(1.0), &ch).unwrap(), 0.143841036, epsilon = 1e-9);
    }

    #[test]
    fn equal_noise_has_no_secrecy() {
        let sigma = PsdMatrix::from_rows(&[alloc::vec![1.0, 0.3], alloc::vec![0.3, 2.0]]).unwrap();
        let ch = WiretapChannel::aligned(sigma.clone(), sigma);
        let k = PsdMatrix::from_rows(&[alloc::vec![0.7, -0.2], alloc::vec![-0.2, 0.4]]).unwrap();
        assert_eq!(rate_s(&k, &ch).unwrap(), 0.0);
    }

    #[test]
    fn scalar_rate_p_and_r0z() {
        let ch = WiretapChannel::scalar(1.0, 2.0).unwrap();
        let s = scalar(1.0);
        let k = scalar(0.5);
        assert_relative_eq!(rate_p(&k, &ch).unwrap(), 0.5 * 1.25f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(rate_0z(&k, &s, &ch).unwrap(), 0.5 * (3.0f64 / 2.5).ln(), epsilon = 1e-15);
    }

    #[test]
    fn endpoints() {
        let ch = WiretapChannel::scalar(1.0, 2.0).unwrap();
        let s = scalar(1.0);
        let (cy, cz) = single_user_capacities(&ch, &s);
        assert_relative_eq!(cy, 0.5 * 2f64.ln(), epsilon = 1e-15);
        let at_s = gaussian_region_rates(&s, &s, &ch).unwrap();
        assert_eq!((at_s.r0y, at_s.r0z), (0.0, 0.0));
        let at_0 = gaussian_region_rates(&PsdMatrix::zeros(1), &s, &ch).unwrap();
        assert_eq!((at_0.rs, at_0.rp), (0.0, 0.0));
        assert_relative_eq!(at_0.r0y, cy, epsilon = 1e-15);
        assert_relative_eq!(at_0.r0z, cz, epsilon = 1e-15);
        assert_eq!(single_user_capacities(&ch, &PsdMatrix::zeros(1)), (0.0, 0.0));
    }

    #[test]
    fn order_violation_reported() {
        let ch = WiretapChannel::scalar(1.0, 2.0).unwrap();
        assert!(matches!(rate_0y(&scalar(2.0), &scalar(1.0), &ch), Err(Error::OrderViolation(_))));
    }

    #[test]
    fn power_rates() {
        let ch = WiretapChannel::scalar(1.0, 2.0).unwrap();
        let zero = PsdMatrix::zeros(1);
        let b = power_region_rates(&zero, &zero, &ch, 1.0).unwrap();
        assert_eq!((b.rs, b.rp, b.r0y, b.r0z), (0.0, 0.0, 0.0, 0.0));
        let p = power_region_rates(&scalar(1.0), &zero, &ch, 1.0).unwrap();
        let c = gaussian_region_rates(&scalar(1.0), &scalar(1.0), &ch).unwrap();
        assert_eq!(p, c);
        assert!(matches!(
            power_region_rates(&scalar(1.0), &scalar(0.5), &ch, 1.0),
            Err(Error::PowerExceeded { .. })
        ));
    }

    #[test]
    fn mapping_examples() {
        let p = PublicRateTriple::new(0.1, 0.2, 0.3).unwrap();
        let t = p.to_equivocation();
        assert_eq!((t.r0, t.re), (0.1, 0.3));
        assert_relative_eq!(t.r1, 0.5, epsilon = 1e-16);
        let back = RateTriple { r0: 0.1, r1: 0.5, re: 0.3 }.to_public().unwrap();
        assert_relative_eq!(back.rp, 0.2, epsilon = 1e-15);
        assert!(matches!(RateTriple { r0: 0.0, r1: 0.1, re: 0.2 }.to_public(), Err(Error::InvalidTriple(_))));
    }

    #[test]
    fn gradient_formula_scalar() {
        let h = DMatrix::from_element(1, 1, 2.0);
        let k = DMatrix::from_element(1, 1, 0.5);
        let sigma = DMatrix::from_element(1, 1, 1.0);
        let (_, g) = half_logdet_with_grad(&h, &k, &sigma).unwrap();
        // d/dk 1/2 ln(4k + 1) = 2 / (4k + 1)
        assert_relative_eq!(g[(0, 0)], 2.0 / 3.0, epsilon = 1e-15);
    }
}
