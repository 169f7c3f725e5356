//! Boundary sweeps over a grid of common rates and weight pairs.

use alloc::vec::Vec;
use core::cmp::Ordering;

use super::weighted::{maximize_weighted, maximize_weighted_power, power_r0_max, BoundaryPoint, SolverConfig};
use crate::channel::{self, InputConstraint, WiretapChannel};
use crate::error::{Error, Result};
use crate::rates;

/// Default gain perturbation for channels that are not aligned.
pub const DEFAULT_ALPHA: f64 = 1e-4;

/// One `(r0*, mu_p, mu_s)` cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub r0_star: f64,
    pub mu_p: f64,
    pub mu_s: f64,
}

/// Cells in `r0`-major order.
pub fn cells(r0_grid: &[f64], weights: &[(f64, f64)]) -> Vec<Cell> {
    r0_grid
        .iter()
        .flat_map(|&r0_star| weights.iter().map(move |&(mu_p, mu_s)| Cell { r0_star, mu_p, mu_s }))
        .collect()
}

/// A channel and constraint prepared for sweeping: general channels are
/// aligned with perturbation `alpha` and the perturbation's equivocation gap
/// is attached to every point.
#[derive(Debug, Clone)]
pub struct BoundaryProblem {
    solved: WiretapChannel,
    square: Option<WiretapChannel>,
    constraint: InputConstraint,
    alpha: f64,
}

impl BoundaryProblem {
    pub fn new(ch: &WiretapChannel, constraint: InputConstraint, alpha: f64) -> Result<Self> {
        ch.validate()?;
        constraint.check_dim(ch.transmit_dim())?;
        if ch.is_aligned() {
            return Ok(Self { solved: ch.clone(), square: None, constraint, alpha: 0.0 });
        }
        let square = if ch.is_square() {
            ch.clone()
        } else {
            channel::square_augment(ch, crate::tol::BIG_NOISE)?
        };
        let aligned = channel::align(&square, alpha)?;
        Ok(Self { solved: aligned.as_channel().clone(), square: Some(square), constraint, alpha })
    }

    /// The aligned channel the solver runs on.
    pub fn solved_channel(&self) -> &WiretapChannel {
        &self.solved
    }

    pub fn constraint(&self) -> &InputConstraint {
        &self.constraint
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest feasible common rate.
    pub fn r0_max(&self, cfg: &SolverConfig) -> Result<f64> {
        match &self.constraint {
            InputConstraint::Covariance(s) => {
                let (cy, cz) = rates::single_user_capacities(&self.solved, s);
                Ok(cy.min(cz))
            }
            InputConstraint::Power(p) => Ok(power_r0_max(&self.solved, *p, cfg)?.0),
        }
    }

    pub fn solve(&self, cell: &Cell, cfg: &SolverConfig) -> Result<BoundaryPoint> {
        let mut point = match &self.constraint {
            InputConstraint::Covariance(s) => {
                maximize_weighted(&self.solved, s, cell.r0_star, cell.mu_p, cell.mu_s, cfg)?
            }
            InputConstraint::Power(p) => {
                maximize_weighted_power(&self.solved, *p, cell.r0_star, cell.mu_p, cell.mu_s, cfg)?
            }
        };
        if let Some(square) = &self.square {
            point.gap = channel::equivocation_gap(square, &point.s, self.alpha)?;
        }
        Ok(point)
    }
}

fn weight_ratio(p: &BoundaryPoint) -> f64 {
    if p.mu_p == 0.0 {
        if p.mu_s == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        p.mu_s / p.mu_p
    }
}

/// Stable sort by `(r0*, mu_s / mu_p)`.
pub fn sort_points(points: &mut [BoundaryPoint]) {
    points.sort_by(|a, b| {
        a.r0_star
            .total_cmp(&b.r0_star)
            .then_with(|| weight_ratio(a).partial_cmp(&weight_ratio(b)).unwrap_or(Ordering::Equal))
    });
}

/// Solves every grid cell with perturbation `alpha` for general channels.
pub fn trace_boundary_with_alpha(
    ch: &WiretapChannel,
    constraint: &InputConstraint,
    r0_grid: &[f64],
    weights: &[(f64, f64)],
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<Vec<BoundaryPoint>> {
    if r0_grid.is_empty() || weights.is_empty() {
        return Err(Error::InvalidParameter("r0 and weight grids must be non-empty".into()));
    }
    let problem = BoundaryProblem::new(ch, constraint.clone(), alpha)?;
    let mut points = cells(r0_grid, weights)
        .iter()
        .map(|c| problem.solve(c, cfg))
        .collect::<Result<Vec<_>>>()?;
    sort_points(&mut points);
    Ok(points)
}

pub fn trace_boundary(
    ch: &WiretapChannel,
    constraint: &InputConstraint,
    r0_grid: &[f64],
    weights: &[(f64, f64)],
    cfg: &SolverConfig,
) -> Result<Vec<BoundaryPoint>> {
    trace_boundary_with_alpha(ch, constraint, r0_grid, weights, DEFAULT_ALPHA, cfg)
}
