//! Parameterizations of the feasible input covariances and the functionals
//! evaluated on them.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::ascent::Blocks;
use super::interval::IntervalMap;
use crate::channel::WiretapChannel;
use crate::linalg;
use crate::rates::{half_logdet_with_grad, RatePoint};

/// Where `(K, S)` comes from.
#[derive(Debug, Clone)]
pub(crate) enum Domain {
    /// Fixed `S`; one block `Q` with `K = F Q F^T`, `0 <= Q <= I`.
    Interval { map: IntervalMap, s: DMatrix<f64>, c_y_s: f64, c_z_s: f64 },
    /// Trace budget; blocks `K1, K2 >= 0` with `tr(K1 + K2) <= budget`,
    /// `K = K1`, `S = K1 + K2`.
    Power { t: usize, budget: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct Eval {
    pub point: RatePoint,
    pub gy_k: DMatrix<f64>,
    pub gz_k: DMatrix<f64>,
    /// Gradients of `C_Y(S)`, `C_Z(S)`; absent when `S` is fixed.
    pub gs: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Model<'a> {
    pub ch: &'a WiretapChannel,
    pub domain: Domain,
    ld_sigma_y: f64,
    ld_sigma_z: f64,
}

/// Projection of `v` onto `{x >= 0, sum x <= cap}`.
pub(crate) fn project_capped_simplex(v: &[f64], cap: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= cap {
        return clipped;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        acc += x;
        let candidate = (acc - cap) / (i as f64 + 1.0);
        if *x - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    a.qr().q()
}

impl<'a> Model<'a> {
    pub fn interval(ch: &'a WiretapChannel, s: &DMatrix<f64>) -> Option<Self> {
        let ld_sigma_y = linalg::logdet_pd(&ch.sigma_y)?;
        let ld_sigma_z = linalg::logdet_pd(&ch.sigma_z)?;
        let c_y_s = 0.5 * (crate::rates::logdet_term(&ch.h_y, s, &ch.sigma_y)? - ld_sigma_y);
        let c_z_s = 0.5 * (crate::rates::logdet_term(&ch.h_z, s, &ch.sigma_z)? - ld_sigma_z);
        let map = IntervalMap::new(&crate::psd::PsdMatrix::new_unchecked(s.clone()));
        Some(Self {
            ch,
            domain: Domain::Interval { map, s: s.clone(), c_y_s, c_z_s },
            ld_sigma_y,
            ld_sigma_z,
        })
    }

    pub fn power(ch: &'a WiretapChannel, budget: f64) -> Option<Self> {
        Some(Self {
            ch,
            domain: Domain::Power { t: ch.transmit_dim(), budget },
            ld_sigma_y: linalg::logdet_pd(&ch.sigma_y)?,
            ld_sigma_z: linalg::logdet_pd(&ch.sigma_z)?,
        })
    }

    /// Number of matrix blocks in the parameterization.
    pub fn n_blocks(&self) -> usize {
        match self.domain {
            Domain::Interval { .. } => 1,
            Domain::Power { .. } => 2,
        }
    }

    pub fn k_of(&self, x: &[DMatrix<f64>]) -> DMatrix<f64> {
        match &self.domain {
            Domain::Interval { map, .. } => map.to_ambient(&x[0]),
            Domain::Power { .. } => x[0].clone(),
        }
    }

    pub fn s_of(&self, x: &[DMatrix<f64>]) -> DMatrix<f64> {
        match &self.domain {
            Domain::Interval { s, .. } => s.clone(),
            Domain::Power { .. } => &x[0] + &x[1],
        }
    }

    pub fn eval(&self, x: &[DMatrix<f64>]) -> Option<Eval> {
        let ch = self.ch;
        let k = self.k_of(x);
        let (hy, gy_k) = half_logdet_with_grad(&ch.h_y, &k, &ch.sigma_y)?;
        let (hz, gz_k) = half_logdet_with_grad(&ch.h_z, &k, &ch.sigma_z)?;
        let (c_y_s, c_z_s, gs) = match &self.domain {
            Domain::Interval { c_y_s, c_z_s, .. } => (*c_y_s, *c_z_s, None),
            Domain::Power { .. } => {
                let s = self.s_of(x);
                let (sy, gy_s) = half_logdet_with_grad(&ch.h_y, &s, &ch.sigma_y)?;
                let (sz, gz_s) = half_logdet_with_grad(&ch.h_z, &s, &ch.sigma_z)?;
                (sy - 0.5 * self.ld_sigma_y, sz - 0.5 * self.ld_sigma_z, Some((gy_s, gz_s)))
            }
        };
        let point = RatePoint {
            c_y_k: hy - 0.5 * self.ld_sigma_y,
            c_z_k: hz - 0.5 * self.ld_sigma_z,
            c_y_s,
            c_z_s,
        };
        Some(Eval { point, gy_k, gz_k, gs })
    }

    /// Chain rule from ambient `(d/dK, d/dS)` to block gradients.
    pub fn block_grad(&self, g_k: &DMatrix<f64>, g_s: &DMatrix<f64>) -> Blocks {
        match &self.domain {
            Domain::Interval { map, .. } => vec![map.pull_back(g_k)],
            Domain::Power { .. } => vec![g_k + g_s, g_s.clone()],
        }
    }

    pub fn project(&self, x: &[DMatrix<f64>]) -> Blocks {
        match &self.domain {
            Domain::Interval { .. } => vec![IntervalMap::clip(&x[0])],
            Domain::Power { t, budget } => {
                let (v1, e1) = linalg::sym_eigen(&x[0]);
                let (v2, e2) = linalg::sym_eigen(&x[1]);
                let joined: Vec<f64> = v1.iter().chain(v2.iter()).copied().collect();
                let p = project_capped_simplex(&joined, *budget);
                let rebuild = |e: &DMatrix<f64>, vals: &[f64]| {
                    let d = DMatrix::from_diagonal(&DVector::from_column_slice(vals));
                    linalg::symmetrize(&(e * d * e.transpose()))
                };
                vec![rebuild(&e1, &p[..*t]), rebuild(&e2, &p[*t..])]
            }
        }
    }

    /// Deterministic starts followed by `n_random` seeded random ones.
    pub fn starts<R: Rng>(&self, n_random: usize, rng: &mut R) -> Vec<Blocks> {
        let mut out = Vec::new();
        match &self.domain {
            Domain::Interval { map, .. } => {
                let r = map.rank();
                let id = DMatrix::<f64>::identity(r, r);
                out.push(vec![DMatrix::zeros(r, r)]);
                out.push(vec![id.clone()]);
                out.push(vec![id * 0.5]);
                for _ in 0..n_random {
                    let o = random_orthogonal(r, rng);
                    let d = DVector::from_fn(r, |_, _| 0.05 + 0.9 * rng.random::<f64>());
                    out.push(vec![linalg::symmetrize(&(&o * DMatrix::from_diagonal(&d) * o.transpose()))]);
                }
            }
            Domain::Power { t, budget } => {
                let t = *t;
                let unit = DMatrix::<f64>::identity(t, t) * (*budget / t as f64);
                out.push(vec![DMatrix::zeros(t, t), unit.clone()]);
                out.push(vec![unit.clone(), DMatrix::zeros(t, t)]);
                out.push(vec![&unit * 0.5, &unit * 0.5]);
                for _ in 0..n_random {
                    let mut blocks = Vec::new();
                    let mut vals = Vec::new();
                    for _ in 0..2 {
                        let d: Vec<f64> = (0..t).map(|_| 0.05 + rng.random::<f64>()).collect();
                        vals.push(d);
                        blocks.push(random_orthogonal(t, rng));
                    }
                    let total: f64 = vals.iter().flatten().sum();
                    let fill = *budget * (0.3 + 0.7 * rng.random::<f64>()) / total;
                    let mats = blocks
                        .iter()
                        .zip(&vals)
                        .map(|(o, d)| {
                            let d = DVector::from_iterator(t, d.iter().map(|v| v * fill));
                            linalg::symmetrize(&(o * DMatrix::from_diagonal(&d) * o.transpose()))
                        })
                        .collect();
                    out.push(mats);
                }
            }
        }
        out
    }
}
