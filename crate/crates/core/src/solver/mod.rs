//! Boundary optimization: secrecy capacity, the weighted boundary problem at
//! a fixed common rate, and sweeps over both.

pub(crate) mod ascent;
mod interval;
pub(crate) mod model;
mod trace;
mod weighted;

pub use interval::{project_interval, IntervalMap};
pub use trace::{
    cells, sort_points, trace_boundary, trace_boundary_with_alpha, BoundaryProblem, Cell, DEFAULT_ALPHA,
};
pub use weighted::{
    maximize_weighted, maximize_weighted_power, power_r0_max, secrecy_capacity, secrecy_capacity_point,
    BoundaryPoint, SolverConfig,
};
