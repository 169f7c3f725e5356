//! Numerics for the capacity-equivocation region of Gaussian MIMO wiretap
//! channels.
//!
//! The crate is `no_std` (it needs `alloc`) and covers the whole numerical
//! pipeline:
//!
//! - [`channel`]: channel and input-constraint data, validation, and the
//!   reduction of a general channel to an aligned one (`Y = X + N_Y`).
//! - [`rates`]: the closed-form log-det rate functionals, the Gaussian rate
//!   region and the mapping between the public-message and equivocation
//!   descriptions of the region.
//! - [`membership`]: witness search for region membership.
//! - [`solver`]: secrecy capacity, the weighted boundary problem for a fixed
//!   common rate, and boundary tracing.
//! - [`kkt`]: first-order optimality certificates for boundary maximizers.
//! - [`enhancement`]: enhanced noise covariances built from certificates and
//!   numerical checks of the inequalities they feed.
//! - [`oracle`]: brute-force grids for `t <= 2` and the scalar closed form.
//!
//! All rates are in nats.

#![no_std]
// `!(x > y)` tests reject NaN on purpose; index loops walk parallel arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod enhancement;
mod error;
pub mod kkt;
pub mod linalg;
pub mod membership;
pub mod oracle;
mod psd;
pub mod rates;
pub mod solver;
pub mod tol;

pub use crate::channel::{AlignedChannel, InputConstraint, ValidatedChannel, WiretapChannel};
pub use crate::error::{Error, Result};
pub use crate::psd::PsdMatrix;
pub use crate::rates::{PublicRateTriple, RateBundle, RateTriple};
pub use crate::solver::{BoundaryPoint, SolverConfig};

pub use nalgebra::DMatrix;
