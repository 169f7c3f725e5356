//! Weighted boundary problem `max mu_p R_p + mu_s R_s` at a fixed common
//! rate, and secrecy capacity as its special case.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ascent::{self, AscentSettings, Blocks, Problem};
use super::model::Model;
use crate::channel::WiretapChannel;
use crate::error::{Error, Result};
use crate::psd::PsdMatrix;
use crate::rates::{PublicRateTriple, RateBundle, RatePoint, RateTriple};
use crate::tol::TIE_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Total number of starts: `K = 0`, `K = S`, `K = S/2`, then random.
    pub restarts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    /// Stop when `||P(x + grad) - x|| <= tol_grad`.
    pub tol_grad: f64,
    pub seed: u64,
    /// Decreasing log-barrier weights for the common-rate constraint.
    pub barrier_schedule: Vec<f64>,
    /// Finish each start with an augmented-Lagrangian solve of the smooth
    /// epigraph form, which drives the constraints to exact activity.
    pub polish: bool,
    /// Largest common-rate violation still reported as feasible.
    pub feas_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iters: 5000,
            step_init: 1.0,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            tol_grad: 1e-8,
            seed: 0,
            barrier_schedule: vec![1e-2, 1e-4, 1e-6],
            polish: true,
            feas_tol: 1e-9,
        }
    }
}

impl SolverConfig {
    /// Tighter stopping rule used before certification.
    pub fn refined() -> Self {
        Self { tol_grad: 1e-10, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("solver config: {what}")));
        if self.restarts == 0 || self.max_iters == 0 {
            return bad("restarts and max_iters must be positive");
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return bad("step_init must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink must lie in (0, 1)");
        }
        if !(self.tol_grad > 0.0 && self.feas_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.barrier_schedule.iter().any(|t| !(*t > 0.0)) {
            return bad("barrier weights must be positive");
        }
        Ok(())
    }

    fn ascent(&self) -> AscentSettings {
        AscentSettings {
            max_iters: self.max_iters,
            step_init: self.step_init,
            armijo_c: self.armijo_c,
            armijo_shrink: self.armijo_shrink,
            tol_grad: self.tol_grad,
            record_history: false,
        }
    }
}

/// One sample of the region boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub r0_star: f64,
    pub mu_p: f64,
    pub mu_s: f64,
    /// Functionals at the optimizer; `rates.k` is `K*`.
    pub rates: RateBundle,
    /// Upper bound in effect (`K1 + K2` under a power budget).
    pub s: PsdMatrix,
    /// Achieved confidential rate.
    pub rs: f64,
    /// Achieved public rate.
    pub rp: f64,
    /// `mu_p * rp + mu_s * rs`.
    pub objective: f64,
    /// Equivocation lost to gain perturbation; zero for aligned input.
    pub gap: f64,
    pub converged: bool,
    pub proj_grad_norm: f64,
    pub feasibility_residual: f64,
    pub certificate_id: Option<String>,
}

impl BoundaryPoint {
    pub fn k_opt(&self) -> &PsdMatrix {
        &self.rates.k
    }

    pub fn r1(&self) -> f64 {
        self.rp + self.rs
    }

    pub fn re(&self) -> f64 {
        self.rs
    }

    pub fn public_triple(&self) -> PublicRateTriple {
        PublicRateTriple { r0: self.r0_star, rp: self.rp, rs: self.rs }
    }

    pub fn rate_triple(&self) -> RateTriple {
        self.public_triple().to_equivocation()
    }
}

/// Weights of the objective actually maximized: below `mu_s = mu_p` the
/// confidential rate is worth no more than public rate, so it is counted
/// at `mu_p`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Weights {
    pub wp: f64,
    pub ws: f64,
}

impl Weights {
    pub fn effective(mu_p: f64, mu_s: f64) -> Self {
        Self { wp: mu_p, ws: mu_s.max(mu_p) }
    }

    pub fn phi(&self, p: &RatePoint, r0: f64) -> f64 {
        self.wp * (p.rate_p() + p.r0_min() - r0) + self.ws * p.rate_s()
    }
}

/// Splits the optimum into reported `(rs, rp)`.
pub(crate) fn reported_rates(p: &RatePoint, mu_p: f64, mu_s: f64, r0: f64) -> (f64, f64) {
    let rp_star = (p.rate_p() + p.r0_min() - r0).max(0.0);
    let rs = p.rate_s();
    if mu_s >= mu_p && rs > 0.0 {
        (rs, rp_star)
    } else {
        (0.0, (rp_star + rs).max(0.0))
    }
}

fn min_weight(r0y: f64, r0z: f64) -> f64 {
    // Weight on the r0y gradient in the subgradient of min{r0y, r0z}.
    if (r0y - r0z).abs() <= TIE_TOL {
        0.5
    } else if r0y < r0z {
        1.0
    } else {
        0.0
    }
}

/// `phi(K) + tau (ln(r0y - r0) + ln(r0z - r0))`; the barrier is dropped
/// when `tau = 0`.
struct BarrierProblem<'m, 'a> {
    model: &'m Model<'a>,
    w: Weights,
    r0: f64,
    tau: f64,
}

impl Problem for BarrierProblem<'_, '_> {
    fn value_grad(&self, x: &[DMatrix<f64>]) -> Option<(f64, Blocks)> {
        let e = self.model.eval(x)?;
        let p = e.point;
        let (r0y, r0z) = (p.rate_0y(), p.rate_0z());
        let lam = min_weight(r0y, r0z);
        let Weights { wp, ws } = self.w;
        let mut value = self.w.phi(&p, self.r0);
        let mut g_k = (&e.gz_k * (1.0 - lam) * -1.0 + &e.gz_k - &e.gy_k * lam) * wp + (&e.gy_k - &e.gz_k) * ws;
        let (gy_s, gz_s) = e.gs.clone().unwrap_or_else(|| {
            let z = DMatrix::zeros(e.gy_k.nrows(), e.gy_k.ncols());
            (z.clone(), z)
        });
        let mut g_s = (&gy_s * lam + &gz_s * (1.0 - lam)) * wp;
        if self.tau > 0.0 {
            let c3 = r0y - self.r0;
            let c4 = r0z - self.r0;
            if !(c3 > 0.0 && c4 > 0.0) {
                return None;
            }
            value += self.tau * (c3.ln() + c4.ln());
            g_k -= &e.gy_k * (self.tau / c3) + &e.gz_k * (self.tau / c4);
            g_s += &gy_s * (self.tau / c3) + &gz_s * (self.tau / c4);
        }
        Some((value, self.model.block_grad(&g_k, &g_s)))
    }

    fn project(&self, x: &[DMatrix<f64>]) -> Blocks {
        self.model.project(x)
    }
}

/// Smooth epigraph form with the public rate as an explicit variable:
///
/// maximize `wp * t + ws * R_s(K)` subject to
/// `t + r0 <= R_p(K) + r0y(K)`, `t + r0 <= R_p(K) + r0z(K)`,
/// `r0 <= r0y(K)`, `r0 <= r0z(K)`,
///
/// handled by an augmented Lagrangian with multipliers `y`.
struct AlProblem<'m, 'a> {
    model: &'m Model<'a>,
    w: Weights,
    r0: f64,
    active: [bool; 4],
    y: [f64; 4],
    rho: f64,
}

struct ConstraintEval {
    c: [f64; 4],
    g_k: [DMatrix<f64>; 4],
    g_s: [DMatrix<f64>; 4],
}

impl AlProblem<'_, '_> {
    fn epigraph(&self) -> bool {
        self.w.wp > 0.0
    }

    fn n(&self) -> usize {
        self.model.n_blocks()
    }

    fn public(&self, x: &[DMatrix<f64>]) -> f64 {
        if self.epigraph() {
            x[self.n()][(0, 0)]
        } else {
            0.0
        }
    }

    fn constraints(&self, e: &super::model::Eval, t: f64) -> ConstraintEval {
        let p = &e.point;
        let zero = DMatrix::zeros(e.gy_k.nrows(), e.gy_k.ncols());
        let (gy_s, gz_s) = e.gs.clone().unwrap_or_else(|| (zero.clone(), zero.clone()));
        ConstraintEval {
            c: [
                p.rate_p() + p.rate_0y() - t - self.r0,
                p.rate_p() + p.rate_0z() - t - self.r0,
                p.rate_0y() - self.r0,
                p.rate_0z() - self.r0,
            ],
            g_k: [&e.gz_k - &e.gy_k, zero.clone(), -&e.gy_k, -&e.gz_k],
            g_s: [gy_s.clone(), gz_s.clone(), gy_s, gz_s],
        }
    }

    fn violation(&self, x: &[DMatrix<f64>]) -> Option<([f64; 4], f64)> {
        let e = self.model.eval(&x[..self.n()])?;
        let ce = self.constraints(&e, self.public(x));
        let viol = (0..4).filter(|&i| self.active[i]).fold(0.0_f64, |m, i| m.max(-ce.c[i]));
        Some((ce.c, viol))
    }
}

impl Problem for AlProblem<'_, '_> {
    fn value_grad(&self, x: &[DMatrix<f64>]) -> Option<(f64, Blocks)> {
        let n = self.n();
        let e = self.model.eval(&x[..n])?;
        let t = self.public(x);
        let Weights { wp, ws } = self.w;
        let p = e.point;
        let mut value = ws * p.rate_s();
        let mut g_k = (&e.gy_k - &e.gz_k) * ws;
        let mut g_s = DMatrix::zeros(g_k.nrows(), g_k.ncols());
        let mut g_t = 0.0;
        if self.epigraph() {
            value += wp * t;
            g_t = wp;
        }
        let ce = self.constraints(&e, t);
        for i in 0..4 {
            if !self.active[i] {
                continue;
            }
            let m = (self.y[i] - self.rho * ce.c[i]).max(0.0);
            value -= (m * m - self.y[i] * self.y[i]) / (2.0 * self.rho);
            if m > 0.0 {
                g_k += &ce.g_k[i] * m;
                g_s += &ce.g_s[i] * m;
                if i < 2 {
                    g_t -= m;
                }
            }
        }
        let mut blocks = self.model.block_grad(&g_k, &g_s);
        if self.epigraph() {
            blocks.push(DMatrix::from_element(1, 1, g_t));
        }
        Some((value, blocks))
    }

    fn project(&self, x: &[DMatrix<f64>]) -> Blocks {
        let n = self.n();
        let mut out = self.model.project(&x[..n]);
        out.extend(x[n..].iter().cloned());
        out
    }
}

/// Result of one solve on a [`Model`].
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub x: Blocks,
    pub point: RatePoint,
    pub phi: f64,
    pub feasibility: f64,
    pub pg_norm: f64,
    pub converged: bool,
}

impl Solution {
    fn better_than(&self, other: &Solution, feas_tol: f64) -> bool {
        let a = self.feasibility <= feas_tol;
        let b = other.feasibility <= feas_tol;
        match (a, b) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => {
                let margin = 1e-12 * other.phi.abs().max(1.0);
                if (self.phi - other.phi).abs() <= margin {
                    (self.converged && !other.converged)
                        || (self.converged == other.converged && self.pg_norm < other.pg_norm)
                } else {
                    self.phi > other.phi
                }
            }
            (false, false) => self.feasibility < other.feasibility,
        }
    }
}

fn finish(model: &Model, w: Weights, r0: f64, x: Blocks, pg_norm: f64, converged: bool) -> Option<Solution> {
    let point = model.eval(&x)?.point;
    let feasibility = (r0 - point.r0_min()).max(0.0);
    Some(Solution { x, phi: w.phi(&point, r0), point, feasibility, pg_norm, converged })
}

fn strictly_feasible(model: &Model, x: &[DMatrix<f64>], r0: f64) -> bool {
    r0 <= 0.0 || model.eval(x).is_some_and(|e| e.point.r0_min() > r0)
}

fn polish(model: &Model, w: Weights, r0: f64, x: &Blocks, tau: f64, cfg: &SolverConfig) -> Option<Solution> {
    let e = model.eval(x)?;
    let p = e.point;
    let lam = min_weight(p.rate_0y(), p.rate_0z());
    let c3 = (p.rate_0y() - r0).max(1e-300);
    let c4 = (p.rate_0z() - r0).max(1e-300);
    let mut prob = AlProblem {
        model,
        w,
        r0,
        active: [w.wp > 0.0, w.wp > 0.0, r0 > 0.0, r0 > 0.0],
        y: [w.wp * lam, w.wp * (1.0 - lam), tau / c3, tau / c4],
        rho: 10.0 * w.wp.max(w.ws).max(1e-3),
    };
    let mut x = x.clone();
    if prob.epigraph() {
        x.push(DMatrix::from_element(1, 1, p.rate_p() + p.r0_min() - r0));
    }
    let mut settings = cfg.ascent();
    let mut prev_viol = f64::INFINITY;
    let mut last = None;
    for round in 0..40 {
        // Early multiplier estimates are rough, so solve loosely at first.
        settings.tol_grad = cfg.tol_grad.max(1e-3 * 0.1_f64.powi(round));
        let out = ascent::maximize(&prob, &x, &settings)?;
        x = out.x;
        let (c, viol) = prob.violation(&x)?;
        let mut dy = 0.0_f64;
        let mut compl = 0.0_f64;
        let mut y_max = 1.0_f64;
        for i in 0..4 {
            if prob.active[i] {
                let next = (prob.y[i] - prob.rho * c[i]).max(0.0);
                dy = dy.max((next - prob.y[i]).abs());
                compl = compl.max(next * c[i].abs());
                y_max = y_max.max(next);
                prob.y[i] = next;
            }
        }
        let tight = settings.tol_grad <= cfg.tol_grad;
        let kkt = out.converged && viol <= cfg.feas_tol && compl <= cfg.feas_tol * y_max;
        let done = tight && kkt;
        last = Some((out.pg_norm, done));
        if done {
            break;
        }
        // A slack constraint that keeps a multiplier stalls just like a
        // violated one. Loose early rounds say little about either.
        let resid = if tight { viol.max(compl / y_max) } else { viol };
        if resid > 0.25 * prev_viol && resid > 0.1 * cfg.feas_tol && prob.rho < 1e8 {
            prob.rho *= 10.0;
        }
        prev_viol = resid;
    }
    let (pg, converged) = last?;
    x.truncate(model.n_blocks());
    if !converged {
        if let Some(sol) = smooth_piece_finish(model, w, r0, &x, cfg) {
            return Some(sol);
        }
    }
    finish(model, w, r0, x, pg, converged)
}

/// Away from ties in `min{r0y, r0z}` and with both common-rate constraints
/// slack, `phi` is smooth near `x` and keeps the conditioning of the
/// original problem, which a large penalty parameter has lost. Ascent on
/// that piece finishes the job if it stays on the piece.
fn smooth_piece_finish(model: &Model, w: Weights, r0: f64, x: &Blocks, cfg: &SolverConfig) -> Option<Solution> {
    let margin = |p: &RatePoint| {
        let gap = (p.rate_0y() - p.rate_0z()).abs();
        let slack = if r0 > 0.0 { p.r0_min() - r0 } else { f64::INFINITY };
        gap.min(slack)
    };
    let start = model.eval(x)?.point;
    if margin(&start) <= SMOOTH_MARGIN {
        return None;
    }
    let prob = BarrierProblem { model, w, r0, tau: 0.0 };
    let out = ascent::maximize(&prob, x, &cfg.ascent())?;
    let end = model.eval(&out.x)?.point;
    let same_piece = margin(&end) > 0.5 * SMOOTH_MARGIN && (end.rate_0y() < end.rate_0z()) == (start.rate_0y() < start.rate_0z());
    if !(out.converged && same_piece) {
        return None;
    }
    finish(model, w, r0, out.x, out.pg_norm, true)
}

const SMOOTH_MARGIN: f64 = 1e-6;

/// Multi-start solve of the weighted problem on `model`. `fallback` is a
/// point with `min{r0y, r0z} >= r0` used when the constraint leaves no
/// strictly feasible interior.
pub(crate) fn solve_model(
    model: &Model,
    w: Weights,
    r0: f64,
    fallback: &Blocks,
    cfg: &SolverConfig,
) -> Solution {
    let mut settings = cfg.ascent();
    if cfg.polish {
        // The polish phase supplies the final accuracy.
        settings.tol_grad = settings.tol_grad.max(1e-7);
    }
    let fallback_solution = || {
        finish(model, w, r0, model.project(fallback), 0.0, true).expect("fallback point lies in the domain")
    };
    let fb = model.project(fallback);
    if r0 > 0.0 && !strictly_feasible(model, &fb, r0 + 1e-13 * r0.max(1.0)) {
        return fallback_solution();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts = model.starts(cfg.restarts.saturating_sub(3), &mut rng);
    let mut best: Option<Solution> = None;
    let mut barrier_runs = Vec::new();
    for start in starts.into_iter().take(cfg.restarts) {
        let mut x = model.project(&start);
        let mut theta = 1.0;
        while !strictly_feasible(model, &x, r0) && theta > 1e-18 {
            theta *= 0.5;
            x = model.project(
                &x.iter().zip(&fb).map(|(a, b)| a * 0.5 + b * 0.5).collect::<Vec<_>>(),
            );
        }
        if !strictly_feasible(model, &x, r0) {
            continue;
        }
        let schedule: Vec<f64> = if r0 > 0.0 { cfg.barrier_schedule.clone() } else { vec![0.0] };
        let mut pg = f64::INFINITY;
        let mut converged = false;
        let mut tau_last = 0.0;
        for &tau in &schedule {
            let prob = BarrierProblem { model, w, r0, tau };
            if let Some(out) = ascent::maximize(&prob, &x, &settings) {
                x = out.x;
                pg = out.pg_norm;
                converged = out.pg_norm <= cfg.tol_grad;
                tau_last = tau;
            }
        }
        if let Some(sol) = finish(model, w, r0, x.clone(), pg, converged) {
            barrier_runs.push((sol, tau_last));
        }
    }
    let top = barrier_runs
        .iter()
        .filter(|(sol, _)| sol.feasibility <= cfg.feas_tol)
        .map(|(sol, _)| sol.phi)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut polished = 0;
    for (sol, _) in &barrier_runs {
        if best.as_ref().is_none_or(|b| sol.better_than(b, cfg.feas_tol)) {
            best = Some(sol.clone());
        }
    }
    if cfg.polish {
        // Only starts whose barrier value is close to the best can still win
        // after polishing, which moves phi by O(tau).
        let mut order: Vec<usize> = (0..barrier_runs.len()).collect();
        order.sort_by(|&a, &b| barrier_runs[b].0.phi.total_cmp(&barrier_runs[a].0.phi));
        for i in order {
            let (sol, tau) = &barrier_runs[i];
            let near = sol.phi >= top - POLISH_WINDOW * top.abs().max(1.0);
            if polished == MAX_POLISHED || !(near || !top.is_finite()) {
                continue;
            }
            polished += 1;
            if let Some(cand) = polish(model, w, r0, &sol.x, *tau, cfg) {
                if best.as_ref().is_none_or(|b| cand.better_than(b, cfg.feas_tol)) {
                    best = Some(cand);
                }
            }
        }
    }
    best.unwrap_or_else(fallback_solution)
}

const POLISH_WINDOW: f64 = 1e-4;
const MAX_POLISHED: usize = 3;

fn check_weights(mu_p: f64, mu_s: f64) -> Result<()> {
    if !(mu_p >= 0.0 && mu_s >= 0.0 && mu_p.is_finite() && mu_s.is_finite()) {
        return Err(Error::InvalidParameter(format!("weights must be finite and >= 0, got ({mu_p}, {mu_s})")));
    }
    Ok(())
}

fn check_r0(r0: f64, max: f64) -> Result<f64> {
    if !(r0.is_finite() && r0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("r0_star must be finite and >= 0, got {r0}")));
    }
    if r0 > max + 1e-12 * max.max(1.0) {
        return Err(Error::InfeasibleR0 { r0_star: r0, max });
    }
    Ok(r0.min(max))
}

pub(crate) fn boundary_point(
    model: &Model,
    sol: &Solution,
    r0: f64,
    mu_p: f64,
    mu_s: f64,
    feas_tol: f64,
) -> BoundaryPoint {
    let k = PsdMatrix::new_unchecked(model.k_of(&sol.x));
    let s = PsdMatrix::new_unchecked(model.s_of(&sol.x));
    let (rs, rp) = reported_rates(&sol.point, mu_p, mu_s, r0);
    BoundaryPoint {
        r0_star: r0,
        mu_p,
        mu_s,
        rates: RateBundle::from_point(k, &sol.point),
        s,
        rs,
        rp,
        objective: mu_p * rp + mu_s * rs,
        gap: 0.0,
        converged: sol.converged && sol.feasibility <= feas_tol,
        proj_grad_norm: sol.pg_norm,
        feasibility_residual: sol.feasibility,
        certificate_id: None,
    }
}

fn interval_model<'a>(ch: &'a WiretapChannel, s: &PsdMatrix) -> Result<Model<'a>> {
    ch.validate()?;
    if s.dim() != ch.transmit_dim() {
        return Err(Error::DimensionMismatch(format!(
            "S is {0}x{0} but the channel has {1} inputs",
            s.dim(),
            ch.transmit_dim()
        )));
    }
    Model::interval(ch, s).ok_or(Error::NotPositiveSemidefinite(s.min_eigenvalue()))
}

/// Maximizes `mu_p R_p + mu_s R_s` over the Gaussian region with the common
/// rate fixed at `r0_star`, with `R_p` eliminated as
/// `R_p(K) + min{r0y, r0z} - r0_star`.
pub fn maximize_weighted(
    ch: &WiretapChannel,
    s: &PsdMatrix,
    r0_star: f64,
    mu_p: f64,
    mu_s: f64,
    cfg: &SolverConfig,
) -> Result<BoundaryPoint> {
    cfg.validate()?;
    check_weights(mu_p, mu_s)?;
    let model = interval_model(ch, s)?;
    let (c_y, c_z) = crate::rates::single_user_capacities(ch, s);
    let r0 = check_r0(r0_star, c_y.min(c_z))?;
    let zero = vec![DMatrix::zeros(model_rank(&model), model_rank(&model))];
    let w = Weights::effective(mu_p, mu_s);
    let sol = if mu_p == 0.0 && mu_s == 0.0 {
        finish(&model, w, r0, zero, 0.0, true).expect("K = 0 is in the domain")
    } else {
        solve_model(&model, w, r0, &zero, cfg)
    };
    Ok(boundary_point(&model, &sol, r0, mu_p, mu_s, cfg.feas_tol))
}

fn model_rank(model: &Model) -> usize {
    match &model.domain {
        super::model::Domain::Interval { map, .. } => map.rank(),
        super::model::Domain::Power { t, .. } => *t,
    }
}

/// Secrecy capacity `max_{0 <= K <= S} R_s(K)` as a boundary point.
pub fn secrecy_capacity_point(ch: &WiretapChannel, s: &PsdMatrix, cfg: &SolverConfig) -> Result<BoundaryPoint> {
    let mut point = maximize_weighted(ch, s, 0.0, 0.0, 1.0, cfg)?;
    if point.rates.rs <= crate::tol::NUM_TOL {
        let zero = PsdMatrix::zeros(s.dim());
        point.rates = crate::rates::gaussian_region_rates(&zero, s, ch)?;
        point.rs = 0.0;
        point.rp = 0.0;
        point.objective = 0.0;
    }
    Ok(point)
}

/// `(C_S, K*)`; `C_S` is clamped at zero and then `K* = 0`.
pub fn secrecy_capacity(ch: &WiretapChannel, s: &PsdMatrix, cfg: &SolverConfig) -> Result<(f64, PsdMatrix)> {
    let point = secrecy_capacity_point(ch, s, cfg)?;
    Ok((point.objective, point.rates.k))
}

/// Largest feasible common rate under a trace budget,
/// `max_{tr S <= P} min{C_Y(S), C_Z(S)}`, with its maximizer.
pub fn power_r0_max(ch: &WiretapChannel, budget: f64, cfg: &SolverConfig) -> Result<(f64, PsdMatrix)> {
    let (value, x) = power_r0_max_blocks(ch, budget, cfg)?;
    Ok((value, PsdMatrix::new_unchecked(x[1].clone())))
}

fn power_model(ch: &WiretapChannel, budget: f64) -> Result<Model<'_>> {
    ch.validate()?;
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidParameter(format!("power budget must be finite and >= 0, got {budget}")));
    }
    Model::power(ch, budget).ok_or(Error::NonFinite)
}

/// Maximizes `min{C_Y(S), C_Z(S)}` with `K1 = 0` held fixed.
struct MaxMinProblem<'m, 'a> {
    model: &'m Model<'a>,
}

impl Problem for MaxMinProblem<'_, '_> {
    fn value_grad(&self, x: &[DMatrix<f64>]) -> Option<(f64, Blocks)> {
        let e = self.model.eval(x)?;
        let (gy_s, gz_s) = e.gs?;
        let p = e.point;
        let lam = min_weight(p.c_y_s, p.c_z_s);
        let g = gy_s * lam + gz_s * (1.0 - lam);
        let zero = DMatrix::zeros(g.nrows(), g.ncols());
        Some((p.c_y_s.min(p.c_z_s), vec![zero, g]))
    }

    fn project(&self, x: &[DMatrix<f64>]) -> Blocks {
        let mut out = self.model.project(&[DMatrix::zeros(x[0].nrows(), x[0].ncols()), x[1].clone()]);
        out[0].fill(0.0);
        out
    }
}

fn power_r0_max_blocks(ch: &WiretapChannel, budget: f64, cfg: &SolverConfig) -> Result<(f64, Blocks)> {
    let model = power_model(ch, budget)?;
    let prob = MaxMinProblem { model: &model };
    let t = ch.transmit_dim();
    let start = vec![DMatrix::zeros(t, t), DMatrix::identity(t, t) * (budget / t as f64)];
    let out = ascent::maximize(&prob, &start, &cfg.ascent()).ok_or(Error::NonFinite)?;
    Ok((out.value, out.x))
}

/// Weighted boundary problem under `tr(K1 + K2) <= budget`, optimizing
/// jointly over `K = K1` and `S = K1 + K2`.
pub fn maximize_weighted_power(
    ch: &WiretapChannel,
    budget: f64,
    r0_star: f64,
    mu_p: f64,
    mu_s: f64,
    cfg: &SolverConfig,
) -> Result<BoundaryPoint> {
    cfg.validate()?;
    check_weights(mu_p, mu_s)?;
    let model = power_model(ch, budget)?;
    let (r0_max, fallback) = power_r0_max_blocks(ch, budget, cfg)?;
    let r0 = check_r0(r0_star, r0_max)?;
    let w = Weights::effective(mu_p, mu_s);
    let sol = if mu_p == 0.0 && mu_s == 0.0 {
        finish(&model, w, r0, fallback, 0.0, true).ok_or(Error::NonFinite)?
    } else {
        solve_model(&model, w, r0, &fallback, cfg)
    };
    Ok(boundary_point(&model, &sol, r0, mu_p, mu_s, cfg.feas_tol))
}
