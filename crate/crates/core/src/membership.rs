//! Region membership: is a rate triple achieved by some `0 <= K <= S`?
//!
//! For a fixed `K` a triple is inside when three slacks are nonnegative:
//!
//! - `R_s(K) - R_s` (resp. `R_s(K) - R_e`),
//! - `C_Y(K) + min{R_0Y, R_0Z} - R_0 - R_p - R_s` (resp. `... - R_0 - R_1`),
//! - `min{R_0Y, R_0Z} - R_0`.
//!
//! The search maximizes the smallest slack over a family of boundary
//! maximizers. With the common rate fixed at `R_0`, the weights
//! `(w, 1)`, `w` in `[0, 1]`, trade the secrecy rate against the total
//! private rate, so a bisection on `w` for `R_s(K) >= R_s` finds the best
//! witness on the boundary. For `t <= 2` the grid oracle adds candidates
//! when the solver finds none.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::WiretapChannel;
use crate::error::Result;
use crate::oracle::{self, GridSpec, OracleObjective};
use crate::psd::PsdMatrix;
use crate::rates::{self, PublicRateTriple, RateBundle, RateTriple};
use crate::solver::{maximize_weighted, SolverConfig};
use crate::tol::{BOUNDARY_BAND, MEMBERSHIP_TOL};

/// A rate triple in either description of the region.
pub trait RegionTriple {
    /// The three slacks at the rates of one `K`; the triple is achieved by
    /// that `K` when all are `>= 0`.
    fn slacks(&self, at: &RateBundle) -> [f64; 3];

    /// Common, public and confidential rates used to steer the search.
    fn search_rates(&self) -> (f64, f64, f64);
}

impl RegionTriple for RateTriple {
    fn slacks(&self, at: &RateBundle) -> [f64; 3] {
        let common = at.r0y.min(at.r0z);
        let c_y = at.rs + at.rp;
        [at.rs - self.re, c_y + common - self.r0 - self.r1, common - self.r0]
    }

    fn search_rates(&self) -> (f64, f64, f64) {
        (self.r0, self.r1 - self.re, self.re)
    }
}

impl RegionTriple for PublicRateTriple {
    fn slacks(&self, at: &RateBundle) -> [f64; 3] {
        let common = at.r0y.min(at.r0z);
        let c_y = at.rs + at.rp;
        [at.rs - self.rs, c_y + common - self.r0 - self.rp - self.rs, common - self.r0]
    }

    fn search_rates(&self) -> (f64, f64, f64) {
        (self.r0, self.rp, self.rs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipConfig {
    pub solver: SolverConfig,
    /// Bisection steps on the weight ratio.
    pub weight_steps: usize,
    /// Grid used as a fallback for `t <= 2`; `None` disables it.
    #[serde(skip)]
    pub oracle_grid: Option<GridSpec>,
    /// Smallest slack accepted as inside.
    pub tol: f64,
    /// Slacks in `[-tol - band, -tol)` are reported as undecided.
    pub band: f64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig { restarts: 4, tol_grad: 1e-7, ..SolverConfig::default() },
            weight_steps: 12,
            oracle_grid: Some(GridSpec {
                theta_resolution: 60,
                angle_resolution: 60,
                refine_passes: 4,
                refine_candidates: 4,
                ..GridSpec::default()
            }),
            tol: MEMBERSHIP_TOL,
            band: BOUNDARY_BAND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Membership {
    /// All slacks are `>= -tol` at `witness`.
    Inside { witness: PsdMatrix, slack: f64 },
    /// The best slack found lies within the undecided band below `-tol`.
    Boundary { best_k: PsdMatrix, slack: f64 },
    /// `margin` is the largest violated slack at the best `K` found.
    /// `search_complete` is false when a solver call failed.
    Outside { best_k: PsdMatrix, margin: f64, search_complete: bool },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside { .. })
    }
}

struct Best {
    k: PsdMatrix,
    slack: f64,
}

impl Best {
    fn offer<T: RegionTriple>(&mut self, triple: &T, b: RateBundle) -> f64 {
        let slack = triple.slacks(&b).into_iter().fold(f64::INFINITY, f64::min);
        if slack > self.slack {
            self.slack = slack;
            self.k = b.k;
        }
        slack
    }
}

/// Decides whether `triple` lies in the Gaussian region for `0 <= K <= S`.
pub fn region_contains<T: RegionTriple>(
    triple: &T,
    ch: &WiretapChannel,
    s: &PsdMatrix,
    cfg: &MembershipConfig,
) -> Result<Membership> {
    let zero = PsdMatrix::zeros(s.dim());
    let mut best = Best { k: zero.clone(), slack: f64::NEG_INFINITY };
    for k in [zero, s.clone()] {
        best.offer(triple, rates::gaussian_region_rates(&k, s, ch)?);
    }
    let mut complete = true;
    let (c_y, c_z) = rates::single_user_capacities(ch, s);
    let (r0, _, rs) = triple.search_rates();
    let r0 = r0.clamp(0.0, c_y.min(c_z));

    if best.slack < -cfg.tol {
        // rs(K(w)) is nonincreasing in w; keep the largest w that still
        // carries the requested secrecy rate.
        let mut solve = |w: f64, best: &mut Best| -> Option<f64> {
            match maximize_weighted(ch, s, r0, w, 1.0, &cfg.solver) {
                Ok(p) => {
                    let rs_k = p.rates.rs;
                    best.offer(triple, p.rates);
                    Some(rs_k)
                }
                Err(_) => {
                    complete = false;
                    None
                }
            }
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if let Some(rs_k) = solve(1.0, &mut best) {
            if rs_k >= rs {
                lo = 1.0;
            }
        }
        if best.slack < -cfg.tol && lo < 1.0 {
            solve(0.0, &mut best);
            for _ in 0..cfg.weight_steps {
                if best.slack >= -cfg.tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                match solve(mid, &mut best) {
                    Some(rs_k) if rs_k >= rs => lo = mid,
                    Some(_) => hi = mid,
                    None => break,
                }
            }
        }
        if best.slack < -cfg.tol && ch.transmit_dim() <= 2 && ch.is_aligned() {
            if let Some(grid) = &cfg.oracle_grid {
                let mut ws: Vec<f64> = Vec::from([lo, hi]);
                ws.dedup();
                for w in ws {
                    let objective = OracleObjective::Weighted { r0_star: r0, mu_p: w, mu_s: 1.0 };
                    if let Ok(o) = oracle::grid_search(ch, s, objective, grid) {
                        best.offer(triple, rates::gaussian_region_rates(&o.k_hat, s, ch)?);
                    }
                }
            }
        }
    }

    Ok(if best.slack >= -cfg.tol {
        Membership::Inside { witness: best.k, slack: best.slack }
    } else if best.slack >= -cfg.tol - cfg.band {
        Membership::Boundary { best_k: best.k, slack: best.slack }
    } else {
        Membership::Outside { best_k: best.k, margin: -best.slack, search_complete: complete }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_setup() -> (WiretapChannel, PsdMatrix) {
        (WiretapChannel::scalar(1.0, 2.0).unwrap(), PsdMatrix::scalar(1.0).unwrap())
    }

    #[test]
    fn origin_is_inside_at_zero() {
        let (ch, s) = scalar_setup();
        let t = PublicRateTriple::new(0.0, 0.0, 0.0).unwrap();
        match region_contains(&t, &ch, &s, &MembershipConfig::default()).unwrap() {
            Membership::Inside { witness, .. } => assert_eq!(witness[(0, 0)], 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn excess_common_rate_is_outside() {
        let (ch, s) = scalar_setup();
        let c_y = 0.5 * 2.0_f64.ln();
        let t = RateTriple::new(c_y + 0.1, 0.0, 0.0).unwrap();
        let m = region_contains(&t, &ch, &s, &MembershipConfig::default()).unwrap();
        assert!(matches!(m, Membership::Outside { .. }), "{m:?}");
    }

    #[test]
    fn scalar_secrecy_point_is_inside_at_full_power() {
        let (ch, s) = scalar_setup();
        let cs = 0.5 * (4.0_f64 / 3.0).ln();
        let t = RateTriple::new(0.0, cs, cs).unwrap();
        match region_contains(&t, &ch, &s, &MembershipConfig::default()).unwrap() {
            Membership::Inside { witness, .. } => assert!((witness[(0, 0)] - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
