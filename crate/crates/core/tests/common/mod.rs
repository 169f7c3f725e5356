#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wiretap_core::{linalg, DMatrix, PsdMatrix, WiretapChannel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

/// `A A^T + floor I`.
pub fn rand_pd(rng: &mut ChaCha8Rng, t: usize, floor: f64) -> PsdMatrix {
    let a = rand_matrix(rng, t, t);
    PsdMatrix::new(&a * a.transpose() + DMatrix::identity(t, t) * floor).unwrap()
}

pub fn rand_aligned(rng: &mut ChaCha8Rng, t: usize) -> WiretapChannel {
    WiretapChannel::aligned(rand_pd(rng, t, 0.1), rand_pd(rng, t, 0.1))
}

/// Random general channel with square, well-conditioned gains.
pub fn rand_general(rng: &mut ChaCha8Rng, t: usize) -> WiretapChannel {
    let hy = rand_matrix(rng, t, t) + DMatrix::identity(t, t) * 1.5;
    let hz = rand_matrix(rng, t, t) + DMatrix::identity(t, t) * 1.5;
    WiretapChannel::new(hy, hz, rand_pd(rng, t, 0.2), rand_pd(rng, t, 0.2))
}

fn rotation(rng: &mut ChaCha8Rng, t: usize) -> DMatrix<f64> {
    rand_matrix(rng, t, t).qr().q()
}

/// `S^{1/2} R diag(u) R^T S^{1/2}` with `u` in `[lo, hi]^t`.
pub fn rand_in_interval(rng: &mut ChaCha8Rng, s: &PsdMatrix, lo: f64, hi: f64) -> PsdMatrix {
    let t = s.dim();
    let root = linalg::psd_sqrt(s);
    let r = rotation(rng, t);
    let u = DMatrix::from_diagonal(&nalgebra_vec(rng, t, lo, hi));
    PsdMatrix::new(linalg::symmetrize(&(&root * &r * u * r.transpose() * &root))).unwrap()
}

fn nalgebra_vec(rng: &mut ChaCha8Rng, t: usize, lo: f64, hi: f64) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_fn(t, |_, _| lo + (hi - lo) * rng.random::<f64>())
}
