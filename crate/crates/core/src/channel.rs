//! Channel and input-constraint data, validation, and the reduction of a
//! general channel `Y = H_Y X + N_Y`, `Z = H_Z X + N_Z` to an aligned one.

use alloc::format;
use alloc::string::String;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::psd::PsdMatrix;
use crate::tol::PD_TOL;

/// Gaussian MIMO wiretap channel.
///
/// `h_y` is `r_Y x t`, `h_z` is `r_Z x t`; the noise covariances must be
/// strictly positive definite. Construct freely and call
/// [`WiretapChannel::validate`] before use on untrusted input.
#[derive(Debug, Clone, PartialEq)]
pub struct WiretapChannel {
    pub h_y: DMatrix<f64>,
    pub h_z: DMatrix<f64>,
    pub sigma_y: PsdMatrix,
    pub sigma_z: PsdMatrix,
}

/// Input constraint on `E[X X^T]`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputConstraint {
    /// `E[X X^T] <= S`.
    Covariance(PsdMatrix),
    /// `tr E[X X^T] <= P`.
    Power(f64),
}

impl InputConstraint {
    pub fn power(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 0.0 {
            Ok(Self::Power(p))
        } else {
            Err(Error::InvalidParameter(format!("power budget must be finite and >= 0, got {p}")))
        }
    }

    pub fn check_dim(&self, t: usize) -> Result<()> {
        match self {
            Self::Covariance(s) if s.dim() != t => Err(Error::DimensionMismatch(format!(
                "constraint S is {0}x{0} but the channel has {1} inputs",
                s.dim(),
                t
            ))),
            _ => Ok(()),
        }
    }
}

impl WiretapChannel {
    pub fn new(
        h_y: DMatrix<f64>,
        h_z: DMatrix<f64>,
        sigma_y: PsdMatrix,
        sigma_z: PsdMatrix,
    ) -> Self {
        Self { h_y, h_z, sigma_y, sigma_z }
    }

    /// Aligned channel: identity gains.
    pub fn aligned(sigma_y: PsdMatrix, sigma_z: PsdMatrix) -> Self {
        let t = sigma_y.dim();
        Self {
            h_y: DMatrix::identity(t, t),
            h_z: DMatrix::identity(sigma_z.dim(), sigma_z.dim()),
            sigma_y,
            sigma_z,
        }
    }

    /// Scalar aligned channel with noise variances `sigma_y2`, `sigma_z2`.
    pub fn scalar(sigma_y2: f64, sigma_z2: f64) -> Result<Self> {
        Ok(Self::aligned(PsdMatrix::scalar(sigma_y2)?, PsdMatrix::scalar(sigma_z2)?))
    }

    pub fn transmit_dim(&self) -> usize {
        self.h_y.ncols()
    }

    pub fn is_square(&self) -> bool {
        let t = self.transmit_dim();
        self.h_y.nrows() == t && self.h_z.nrows() == t
    }

    /// Both gains are exactly the identity.
    pub fn is_aligned(&self) -> bool {
        let t = self.transmit_dim();
        self.is_square()
            && self.h_y == DMatrix::identity(t, t)
            && self.h_z == DMatrix::identity(t, t)
    }

    fn check_dims(&self) -> Result<()> {
        let t = self.h_y.ncols();
        if self.h_z.ncols() != t {
            return Err(Error::DimensionMismatch(format!(
                "H_Y has {t} columns but H_Z has {}",
                self.h_z.ncols()
            )));
        }
        if self.sigma_y.dim() != self.h_y.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "H_Y has {} rows but Sigma_Y is {1}x{1}",
                self.h_y.nrows(),
                self.sigma_y.dim()
            )));
        }
        if self.sigma_z.dim() != self.h_z.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "H_Z has {} rows but Sigma_Z is {1}x{1}",
                self.h_z.nrows(),
                self.sigma_z.dim()
            )));
        }
        if t == 0 {
            return Err(Error::DimensionMismatch("channel has no inputs".into()));
        }
        if self.h_y.iter().chain(self.h_z.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Checks dimensions and strict positive definiteness of both noise
    /// covariances, caching their eigen-decompositions.
    pub fn validate(&self) -> Result<ValidatedChannel> {
        self.check_dims()?;
        let eig_y = checked_noise_eigen(&self.sigma_y, "Sigma_Y")?;
        let eig_z = checked_noise_eigen(&self.sigma_z, "Sigma_Z")?;
        Ok(ValidatedChannel { channel: self.clone(), eig_y, eig_z })
    }
}

fn checked_noise_eigen(
    sigma: &PsdMatrix,
    which: &'static str,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (vals, vecs) = linalg::sym_eigen(sigma);
    let top = vals.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(top > 0.0 && min > PD_TOL * top) {
        return Err(Error::NonPositiveDefiniteNoise { which, min_eigenvalue: min });
    }
    Ok((vals, vecs))
}

/// A channel that passed [`WiretapChannel::validate`].
#[derive(Debug, Clone)]
pub struct ValidatedChannel {
    channel: WiretapChannel,
    eig_y: (DVector<f64>, DMatrix<f64>),
    eig_z: (DVector<f64>, DMatrix<f64>),
}

impl ValidatedChannel {
    pub fn channel(&self) -> &WiretapChannel {
        &self.channel
    }

    pub fn into_channel(self) -> WiretapChannel {
        self.channel
    }

    /// Ascending eigenvalues and eigenvectors of `Sigma_Y`.
    pub fn sigma_y_eigen(&self) -> (&DVector<f64>, &DMatrix<f64>) {
        (&self.eig_y.0, &self.eig_y.1)
    }

    pub fn sigma_z_eigen(&self) -> (&DVector<f64>, &DMatrix<f64>) {
        (&self.eig_z.0, &self.eig_z.1)
    }
}

impl core::ops::Deref for ValidatedChannel {
    type Target = WiretapChannel;

    fn deref(&self) -> &WiretapChannel {
        &self.channel
    }
}

/// Replaces a receiver with more antennas than inputs by the sufficient
/// statistic `U_t^T Sigma^{-1/2} y`, which has `t` rows and white noise.
fn compress_rows(h: &DMatrix<f64>, sigma: &PsdMatrix) -> Result<(DMatrix<f64>, PsdMatrix)> {
    let t = h.ncols();
    let whitener = linalg::inv_sym_eig(&linalg::psd_sqrt(sigma))
        .map_err(|e| match e {
            Error::NonPositiveResult(m) => {
                Error::NonPositiveDefiniteNoise { which: "Sigma", min_eigenvalue: m }
            }
            other => other,
        })?;
    let svd = (whitener * h).svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut compressed = DMatrix::zeros(t, t);
    for (i, sv) in svd.singular_values.iter().enumerate().take(t) {
        compressed.set_row(i, &(v_t.row(i) * *sv));
    }
    Ok((compressed, PsdMatrix::identity(t)))
}

fn pad_rows(h: &DMatrix<f64>, sigma: &PsdMatrix, big_noise: f64) -> (DMatrix<f64>, PsdMatrix) {
    let (r, t) = h.shape();
    let extra = t - r;
    let mut padded = DMatrix::zeros(t, t);
    padded.view_mut((0, 0), (r, t)).copy_from(h);
    let noise = linalg::block_diag_scaled_identity(sigma, big_noise, extra);
    (padded, PsdMatrix::new_unchecked(noise))
}

/// Makes both receivers have exactly `t` antennas.
///
/// Receivers with `r > t` are first row-compressed to a `t x t` gain with
/// white noise (an exact sufficient statistic); receivers with `r < t` get
/// zero-gain rows whose noise variance is `big_noise`, independent of the
/// original noise.
pub fn square_augment(ch: &WiretapChannel, big_noise: f64) -> Result<WiretapChannel> {
    if !(big_noise.is_finite() && big_noise > 0.0) {
        return Err(Error::InvalidParameter(format!("big_noise must be positive, got {big_noise}")));
    }
    let t = ch.transmit_dim();
    let fix = |h: &DMatrix<f64>, sigma: &PsdMatrix| -> Result<(DMatrix<f64>, PsdMatrix)> {
        match h.nrows().cmp(&t) {
            core::cmp::Ordering::Equal => Ok((h.clone(), sigma.clone())),
            core::cmp::Ordering::Less => Ok(pad_rows(h, sigma, big_noise)),
            core::cmp::Ordering::Greater => compress_rows(h, sigma),
        }
    };
    let (h_y, sigma_y) = fix(&ch.h_y, &ch.sigma_y)?;
    let (h_z, sigma_z) = fix(&ch.h_z, &ch.sigma_z)?;
    Ok(WiretapChannel { h_y, h_z, sigma_y, sigma_z })
}

/// Perturbed invertible gain `H_bar = Sigma^{1/2} U (Lambda + alpha I) V^T`
/// where `Sigma^{-1/2} H = U Lambda V^T`, together with its inverse.
pub fn perturbed_gain(
    h: &DMatrix<f64>,
    sigma: &PsdMatrix,
    alpha: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let t = h.ncols();
    if h.nrows() != t {
        return Err(Error::DimensionMismatch(format!(
            "alignment needs square gains, got {}x{t}",
            h.nrows()
        )));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let root = linalg::psd_sqrt(sigma);
    let root_inv = linalg::inv_sym_eig(&root)
        .map_err(|_| Error::NonPositiveDefiniteNoise { which: "Sigma", min_eigenvalue: 0.0 })?;
    let svd = (&root_inv * h).svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let shifted = svd.singular_values.map(|s| s + alpha);
    let top = shifted.iter().fold(0.0_f64, |a, x| a.max(*x));
    let bottom = shifted.iter().fold(f64::INFINITY, |a, x| a.min(*x));
    if !(bottom.is_finite() && bottom > top * 1e-14) {
        return Err(Error::SingularPerturbedGain { alpha });
    }
    let h_bar = &root * &u * DMatrix::from_diagonal(&shifted) * &v_t;
    let inv_shifted = DMatrix::from_diagonal(&shifted.map(|s| 1.0 / s));
    let h_bar_inv = v_t.transpose() * inv_shifted * u.transpose() * root_inv;
    if h_bar_inv.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularPerturbedGain { alpha });
    }
    Ok((h_bar, h_bar_inv))
}

/// Aligned channel `Y = X + N_Y`, `Z = X + N_Z` obtained from a general one.
#[derive(Debug, Clone)]
pub struct AlignedChannel {
    pub sigma_y_eff: PsdMatrix,
    pub sigma_z_eff: PsdMatrix,
    /// Perturbation used by [`align`]; zero for channels aligned on input.
    pub alpha: f64,
    pub provenance: String,
    channel: WiretapChannel,
}

impl AlignedChannel {
    /// Wraps covariances of a channel that is already aligned.
    pub fn new(sigma_y: PsdMatrix, sigma_z: PsdMatrix) -> Result<Self> {
        let channel = WiretapChannel::aligned(sigma_y.clone(), sigma_z.clone());
        channel.validate()?;
        Ok(Self {
            sigma_y_eff: sigma_y,
            sigma_z_eff: sigma_z,
            alpha: 0.0,
            provenance: "aligned input".into(),
            channel,
        })
    }

    /// Identity-gain channel carrying the effective covariances.
    pub fn as_channel(&self) -> &WiretapChannel {
        &self.channel
    }

    pub fn dim(&self) -> usize {
        self.sigma_y_eff.dim()
    }
}

/// Replaces each square gain by its `alpha`-perturbed invertible version and
/// moves it into the noise: `Sigma_eff = H_bar^{-1} Sigma H_bar^{-T}`.
pub fn align(ch: &WiretapChannel, alpha: f64) -> Result<AlignedChannel> {
    if !ch.is_square() {
        return Err(Error::DimensionMismatch(
            "align needs r_Y = r_Z = t; apply square_augment first".into(),
        ));
    }
    let effective = |h: &DMatrix<f64>, sigma: &PsdMatrix| -> Result<PsdMatrix> {
        let (_, inv) = perturbed_gain(h, sigma, alpha)?;
        let eff = PsdMatrix::new_unchecked(&inv * sigma.as_matrix() * inv.transpose());
        if eff.is_positive_definite(PD_TOL) {
            Ok(eff)
        } else {
            Err(Error::SingularPerturbedGain { alpha })
        }
    };
    let sigma_y_eff = effective(&ch.h_y, &ch.sigma_y)?;
    let sigma_z_eff = effective(&ch.h_z, &ch.sigma_z)?;
    let channel = WiretapChannel::aligned(sigma_y_eff.clone(), sigma_z_eff.clone());
    Ok(AlignedChannel {
        sigma_y_eff,
        sigma_z_eff,
        alpha,
        provenance: format!("whitened-SVD gain perturbation, alpha = {alpha:e}"),
        channel,
    })
}

/// Brings any validated channel to aligned form: channels with identity
/// gains pass through, others are squared up with [`square_augment`] and
/// perturbed by `alpha`.
pub fn to_aligned(ch: &WiretapChannel, alpha: f64) -> Result<AlignedChannel> {
    if ch.is_aligned() {
        return AlignedChannel::new(ch.sigma_y.clone(), ch.sigma_z.clone());
    }
    let square = if ch.is_square() { ch.clone() } else { square_augment(ch, crate::tol::BIG_NOISE)? };
    align(&square, alpha)
}

/// Upper bound on the equivocation lost by perturbing the eavesdropper gain:
/// `C_Z` of the perturbed gain minus `C_Z` of the original, at input `S`.
///
/// Clamped at zero; with the whitened perturbation the raw value is
/// nonnegative up to rounding.
pub fn equivocation_gap(ch: &WiretapChannel, s: &PsdMatrix, alpha: f64) -> Result<f64> {
    if !ch.is_square() {
        return Err(Error::DimensionMismatch("equivocation_gap needs a square channel".into()));
    }
    if s.dim() != ch.transmit_dim() {
        return Err(Error::DimensionMismatch("S does not match the channel input".into()));
    }
    let (h_bar, _) = perturbed_gain(&ch.h_z, &ch.sigma_z, alpha)?;
    let perturbed = crate::rates::half_logdet_ratio(&h_bar, s, &ch.sigma_z)
        .ok_or(Error::NonPositiveDefiniteNoise { which: "Sigma_Z", min_eigenvalue: 0.0 })?;
    let original = crate::rates::half_logdet_ratio(&ch.h_z, s, &ch.sigma_z)
        .ok_or(Error::NonPositiveDefiniteNoise { which: "Sigma_Z", min_eigenvalue: 0.0 })?;
    Ok((perturbed - original).max(0.0))
}
