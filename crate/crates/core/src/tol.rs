//! Numerical tolerances shared across modules.
//!
//! Relative tolerances are scaled by the largest eigenvalue magnitude of the
//! matrices involved; absolute ones are in nats or in Frobenius norm.

/// Positive-definiteness threshold, relative to the largest eigenvalue.
pub const PD_TOL: f64 = 1e-10;
/// Maximum asymmetry `|A - A^T|`, relative to the largest entry magnitude.
pub const SYM_TOL: f64 = 1e-9;
/// Loewner-order slack, relative.
pub const PSD_ORDER_TOL: f64 = 1e-9;
/// Region membership slack in nats.
pub const MEMBERSHIP_TOL: f64 = 1e-6;
/// Width of the band below `-MEMBERSHIP_TOL` reported as undecided.
pub const BOUNDARY_BAND: f64 = 1e-5;
/// `r0y` and `r0z` closer than this are treated as tied by the solver.
pub const TIE_TOL: f64 = 1e-9;
/// Eigenvalues below `RANK_TOL * lambda_max` span a null space.
pub const RANK_TOL: f64 = 1e-8;
/// Rate comparisons for KKT case detection, nats.
pub const CASE_TOL: f64 = 1e-7;
/// Matrix residuals of the enhancement constructions.
pub const ENH_TOL: f64 = 1e-8;
/// Extremal inequality slack, nats.
pub const EXT_TOL: f64 = 1e-9;
/// Objective-rewrite identity slack, nats.
pub const REWRITE_TOL: f64 = 1e-9;
/// Agreement of rate functionals before and after square augmentation.
pub const AUG_TOL: f64 = 1e-6;
/// Noise variance used for zero-gain padding rows.
pub const BIG_NOISE: f64 = 1e8;
/// Values of a rate functional this close to zero are reported as zero.
pub const NUM_TOL: f64 = 1e-12;
/// Default perturbation grid for the general-to-aligned limit.
pub const ALPHA_GRID: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
