//! Brute-force ground truth for `t <= 2`.
//!
//! Inputs are parameterized as `K = S^{1/2} R diag(theta) R^T S^{1/2}` with
//! `theta` in `[0, 1]^t` and `R` a rotation by a gridded angle. Every value is
//! computed from explicit 1x1 / 2x2 determinants, independently of the
//! solver and of [`crate::rates`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::WiretapChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::psd::PsdMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    /// Grid points per eigenvalue axis, endpoints included.
    pub theta_resolution: usize,
    /// Rotation angles over `[0, pi)` (t = 2 only).
    pub angle_resolution: usize,
    pub max_dim: usize,
    /// Number of fivefold spacing reductions in the local zoom around the
    /// best coarse points; the spacing is kept while the best point keeps
    /// travelling. Zero disables refinement.
    pub refine_passes: usize,
    /// Coarse candidates refined (best per angle, then best overall).
    pub refine_candidates: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { theta_resolution: 200, angle_resolution: 180, max_dim: 2, refine_passes: 10, refine_candidates: 8 }
    }
}

impl GridSpec {
    /// Plain grid of the given resolution without refinement.
    pub fn coarse(theta_resolution: usize, angle_resolution: usize) -> Self {
        Self { theta_resolution, angle_resolution, refine_passes: 0, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.theta_resolution < 2 || self.angle_resolution < 2 {
            return Err(Error::InvalidParameter("grid resolutions must be >= 2".into()));
        }
        Ok(())
    }
}

/// Functional maximized by [`grid_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleObjective {
    /// `R_s(K)`.
    SecrecyRate,
    /// Best `mu_p R_p + mu_s R_s` achievable with `K` at common rate
    /// `r0_star`, over `K` with `min{R_0Y, R_0Z} >= r0_star`.
    Weighted { r0_star: f64, mu_p: f64, mu_s: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub k_hat: PsdMatrix,
    pub value: f64,
    pub theta: Vec<f64>,
    pub angle: f64,
    pub evaluations: usize,
}

/// Symmetric 2x2 (or 1x1, stored in `a`) matrices as `(a, b, c)` =
/// `[[a, b], [b, c]]`.
type Sym2 = [f64; 3];

fn det(m: Sym2, dim: usize) -> f64 {
    if dim == 1 {
        m[0]
    } else {
        m[0] * m[2] - m[1] * m[1]
    }
}

fn scale(a: Sym2, c: f64) -> Sym2 {
    [c * a[0], c * a[1], c * a[2]]
}

fn add(a: Sym2, b: Sym2) -> Sym2 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sym2(m: &DMatrix<f64>) -> Sym2 {
    if m.nrows() == 1 {
        [m[(0, 0)], 0.0, 0.0]
    } else {
        [m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]]
    }
}

struct Evaluator {
    dim: usize,
    sy: Sym2,
    sz: Sym2,
    ln_det_sy: f64,
    ln_det_sz: f64,
    c_y_s: f64,
    c_z_s: f64,
    objective: OracleObjective,
}

impl Evaluator {
    fn new(ch: &WiretapChannel, s: &PsdMatrix, objective: OracleObjective) -> Self {
        let dim = s.dim();
        let sy = sym2(&ch.sigma_y);
        let sz = sym2(&ch.sigma_z);
        let ln_det_sy = det(sy, dim).ln();
        let ln_det_sz = det(sz, dim).ln();
        let s2 = sym2(s);
        let mut ev = Self { dim, sy, sz, ln_det_sy, ln_det_sz, c_y_s: 0.0, c_z_s: 0.0, objective };
        ev.c_y_s = ev.c_y(s2);
        ev.c_z_s = ev.c_z(s2);
        ev
    }

    fn c_y(&self, k: Sym2) -> f64 {
        0.5 * (det(add(k, self.sy), self.dim).ln() - self.ln_det_sy)
    }

    fn c_z(&self, k: Sym2) -> f64 {
        0.5 * (det(add(k, self.sz), self.dim).ln() - self.ln_det_sz)
    }

    fn feasible(&self, k: Sym2) -> bool {
        match self.objective {
            OracleObjective::SecrecyRate => true,
            OracleObjective::Weighted { r0_star, .. } => {
                let common = (self.c_y_s - self.c_y(k)).min(self.c_z_s - self.c_z(k));
                common >= r0_star - 1e-12 * r0_star.max(1.0)
            }
        }
    }

    /// Value at the feasible point of the segment `[0, K]` nearest `K`, with
    /// its scale. Both common rates are nonincreasing along the segment, so
    /// the feasible part is an interval starting at zero and bisection finds
    /// its end. This keeps zooming continuous across an active constraint.
    fn snapped(&self, k: Sym2) -> (f64, f64) {
        self.snapped_from([0.0; 3], k).unwrap_or((f64::NEG_INFINITY, 0.0))
    }

    /// As [`Self::snapped`] on the segment `[base, base + dir]` with `dir`
    /// positive semidefinite; `None` when `base` itself is infeasible.
    fn snapped_from(&self, base: Sym2, dir: Sym2) -> Option<(f64, f64)> {
        let at = |c: f64| add(base, scale(dir, c));
        if self.feasible(at(1.0)) {
            return Some((self.value(at(1.0)), 1.0));
        }
        if !self.feasible(base) {
            return None;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.feasible(at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some((self.value(at(lo)), lo))
    }

    /// Best of the snaps of `t1 P1 + t2 P2` towards zero, towards `t2 P2`
    /// and towards `t1 P1`, as `(value, t1, t2)`. The one-sided snaps keep a
    /// face `theta_i = 1` while the point slides along an active constraint.
    fn snapped_2d(&self, p1: Sym2, p2: Sym2, t1: f64, t2: f64) -> (f64, f64, f64) {
        let (v, c) = self.snapped(combine(p1, p2, t1, t2));
        let mut best = (v, c * t1, c * t2);
        if c < 1.0 {
            if let Some((v, c)) = self.snapped_from(scale(p2, t2), scale(p1, t1)) {
                if v > best.0 {
                    best = (v, c * t1, t2);
                }
            }
            if let Some((v, c)) = self.snapped_from(scale(p1, t1), scale(p2, t2)) {
                if v > best.0 {
                    best = (v, t1, c * t2);
                }
            }
        }
        best
    }

    /// Objective at `K`, `-inf` when the common-rate constraint fails.
    fn value(&self, k: Sym2) -> f64 {
        let cy = self.c_y(k);
        let cz = self.c_z(k);
        match self.objective {
            OracleObjective::SecrecyRate => cy - cz,
            OracleObjective::Weighted { r0_star, mu_p, mu_s } => {
                let common = (self.c_y_s - cy).min(self.c_z_s - cz);
                if common < r0_star - 1e-12 * r0_star.max(1.0) {
                    return f64::NEG_INFINITY;
                }
                // Largest mu_p R_p + mu_s R_s with R_s <= [R_s(K)]^+ and
                // R_0 + R_p + R_s <= C_Y(K) + min{R_0Y, R_0Z}.
                let total = cy + common - r0_star;
                mu_p * total + (mu_s - mu_p).max(0.0) * (cy - cz).max(0.0)
            }
        }
    }
}

/// `K = theta_1 P_1 + theta_2 P_2` with `P_i = a_i a_i^T`, `A = S^{1/2} R`.
fn rotated_frame(root: &DMatrix<f64>, angle: f64) -> (Sym2, Sym2) {
    let (s, c) = angle.sin_cos();
    let a1 = [root[(0, 0)] * c + root[(0, 1)] * s, root[(1, 0)] * c + root[(1, 1)] * s];
    let a2 = [-root[(0, 0)] * s + root[(0, 1)] * c, -root[(1, 0)] * s + root[(1, 1)] * c];
    (
        [a1[0] * a1[0], a1[0] * a1[1], a1[1] * a1[1]],
        [a2[0] * a2[0], a2[0] * a2[1], a2[1] * a2[1]],
    )
}

fn combine(p1: Sym2, p2: Sym2, t1: f64, t2: f64) -> Sym2 {
    [t1 * p1[0] + t2 * p2[0], t1 * p1[1] + t2 * p2[1], t1 * p1[2] + t2 * p2[2]]
}

fn linspace(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Points `center + j h`, `|j| <= m`, clamped into `[lo, hi]`.
fn window(center: f64, h: f64, m: i32, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = (-m..=m).map(|j| (center + j as f64 * h).clamp(lo, hi)).collect();
    pts.dedup();
    pts
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    angle: f64,
    t1: f64,
    t2: f64,
}

const ZOOM_HALF: i32 = 10;
const MAX_MOVES: usize = 400;

/// True when the new best sits in the outer half of the window, so the
/// optimum may lie beyond it.
fn moved_to_rim(from: &Candidate, to: &Candidate, h_theta: f64, h_angle: f64) -> bool {
    let rim = 0.5 * ZOOM_HALF as f64;
    (to.t1 - from.t1).abs() > rim * h_theta
        || (to.t2 - from.t2).abs() > rim * h_theta
        || (to.angle - from.angle).abs() > rim * h_angle
}

/// Local zoom around `cand`, shrinking the window `refine_passes` times.
fn zoom_2d(ev: &Evaluator, root: &DMatrix<f64>, grid: &GridSpec, mut cand: Candidate, evaluations: &mut usize) -> Candidate {
    let mut h_theta = 2.0 / (grid.theta_resolution - 1) as f64 / ZOOM_HALF as f64;
    let mut h_angle = 2.0 * PI / grid.angle_resolution as f64 / ZOOM_HALF as f64;
    let mut shrinks = 0;
    let mut moves = 0;
    while shrinks < grid.refine_passes && moves < MAX_MOVES {
        let start = cand;
        let angles = window(cand.angle, h_angle, ZOOM_HALF, f64::NEG_INFINITY, f64::INFINITY);
        let t1s = window(cand.t1, h_theta, ZOOM_HALF, 0.0, 1.0);
        let t2s = window(cand.t2, h_theta, ZOOM_HALF, 0.0, 1.0);
        for &angle in &angles {
            let (p1, p2) = rotated_frame(root, angle);
            for &t1 in &t1s {
                for &t2 in &t2s {
                    let (v, t1, t2) = ev.snapped_2d(p1, p2, t1, t2);
                    *evaluations += 1;
                    if v > cand.value {
                        cand = Candidate { value: v, angle, t1, t2 };
                    }
                }
            }
        }
        // Keep the spacing while the best point is still travelling
        // (along a curved constraint it can be far from the coarse pick).
        if moved_to_rim(&start, &cand, h_theta, h_angle) {
            moves += 1;
        } else {
            h_theta *= 2.0 / ZOOM_HALF as f64;
            h_angle *= 2.0 / ZOOM_HALF as f64;
            shrinks += 1;
        }
    }
    cand
}

fn search_2d(ev: &Evaluator, root: &DMatrix<f64>, grid: &GridSpec) -> (Candidate, usize) {
    let thetas = linspace(grid.theta_resolution);
    let mut evaluations = 0;
    let mut per_angle = Vec::with_capacity(grid.angle_resolution);
    for j in 0..grid.angle_resolution {
        let angle = PI * j as f64 / grid.angle_resolution as f64;
        let (p1, p2) = rotated_frame(root, angle);
        let mut best = Candidate { value: f64::NEG_INFINITY, angle, t1: 0.0, t2: 0.0 };
        for &t1 in &thetas {
            for &t2 in &thetas {
                let v = ev.value(combine(p1, p2, t1, t2));
                evaluations += 1;
                if v > best.value {
                    best = Candidate { value: v, angle, t1, t2 };
                }
            }
        }
        per_angle.push(best);
    }
    let mut order: Vec<usize> = (0..per_angle.len()).collect();
    order.sort_by(|&a, &b| per_angle[b].value.total_cmp(&per_angle[a].value).then(a.cmp(&b)));
    let mut best = per_angle[order[0]];
    if grid.refine_passes == 0 {
        return (best, evaluations);
    }
    for &idx in order.iter().take(grid.refine_candidates.max(1)) {
        let cand = zoom_2d(ev, root, grid, per_angle[idx], &mut evaluations);
        if cand.value > best.value {
            best = cand;
        }
    }
    (best, evaluations)
}

fn search_1d(ev: &Evaluator, s: f64, grid: &GridSpec) -> (Candidate, usize) {
    let mut evaluations = 0;
    let mut best = Candidate { value: f64::NEG_INFINITY, angle: 0.0, t1: 0.0, t2: 0.0 };
    for t in linspace(grid.theta_resolution) {
        let v = ev.value([t * s, 0.0, 0.0]);
        evaluations += 1;
        if v > best.value {
            best.value = v;
            best.t1 = t;
        }
    }
    let mut h = 2.0 / (grid.theta_resolution - 1) as f64 / ZOOM_HALF as f64;
    let mut shrinks = 0;
    let mut moves = 0;
    while shrinks < grid.refine_passes && moves < MAX_MOVES {
        let start = best;
        for t in window(best.t1, h, ZOOM_HALF, 0.0, 1.0) {
            let (v, c) = ev.snapped([t * s, 0.0, 0.0]);
            evaluations += 1;
            if v > best.value {
                best.value = v;
                best.t1 = c * t;
            }
        }
        if moved_to_rim(&start, &best, h, 0.0) {
            moves += 1;
        } else {
            h *= 2.0 / ZOOM_HALF as f64;
            shrinks += 1;
        }
    }
    (best, evaluations)
}

/// Maximizes `objective` over the gridded interval `0 <= K <= S`.
/// Deterministic; honors the common-rate constraint of
/// [`OracleObjective::Weighted`].
pub fn grid_search(
    ch: &WiretapChannel,
    s: &PsdMatrix,
    objective: OracleObjective,
    grid: &GridSpec,
) -> Result<OracleResult> {
    let t = ch.transmit_dim();
    if t > grid.max_dim || t > 2 {
        return Err(Error::DimensionTooLarge { dim: t, max: grid.max_dim.min(2) });
    }
    grid.validate()?;
    if !ch.is_aligned() {
        return Err(Error::InvalidParameter("the oracle needs an aligned channel".into()));
    }
    ch.validate()?;
    if s.dim() != t {
        return Err(Error::DimensionMismatch(format!("S is {0}x{0}, channel has {t} inputs", s.dim())));
    }
    let ev = Evaluator::new(ch, s, objective);
    if t == 1 {
        let (best, evaluations) = search_1d(&ev, s[(0, 0)], grid);
        if !best.value.is_finite() {
            return Err(Error::InfeasibleR0 { r0_star: r0_of(objective), max: ev.c_y_s.min(ev.c_z_s) });
        }
        let k_hat = PsdMatrix::new_unchecked(DMatrix::from_element(1, 1, best.t1 * s[(0, 0)]));
        return Ok(OracleResult { k_hat, value: best.value, theta: vec![best.t1], angle: 0.0, evaluations });
    }
    let root = linalg::psd_sqrt(s);
    let (best, evaluations) = search_2d(&ev, &root, grid);
    if !best.value.is_finite() {
        return Err(Error::InfeasibleR0 { r0_star: r0_of(objective), max: ev.c_y_s.min(ev.c_z_s) });
    }
    let (p1, p2) = rotated_frame(&root, best.angle);
    let k = combine(p1, p2, best.t1, best.t2);
    let k_hat = PsdMatrix::new_unchecked(DMatrix::from_row_slice(2, 2, &[k[0], k[1], k[1], k[2]]));
    Ok(OracleResult { k_hat, value: best.value, theta: vec![best.t1, best.t2], angle: best.angle, evaluations })
}

fn r0_of(objective: OracleObjective) -> f64 {
    match objective {
        OracleObjective::SecrecyRate => 0.0,
        OracleObjective::Weighted { r0_star, .. } => r0_star,
    }
}

/// Scalar secrecy capacity: the objective is monotone in `K` with the sign
/// of `sigma_z2 - sigma_y2`, so the optimum is an endpoint.
pub fn scalar_closed_form(sigma_y2: f64, sigma_z2: f64, s: f64) -> Result<(f64, f64)> {
    if !(sigma_y2 > 0.0 && sigma_z2 > 0.0 && sigma_y2.is_finite() && sigma_z2.is_finite()) {
        return Err(Error::InvalidParameter("noise variances must be positive".into()));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter("S must be >= 0".into()));
    }
    if sigma_y2 < sigma_z2 && s > 0.0 {
        let cs = 0.5 * ((s + sigma_y2) / sigma_y2).ln() - 0.5 * ((s + sigma_z2) / sigma_z2).ln();
        Ok((cs, s))
    } else {
        Ok((0.0, 0.0))
    }
}
