//! Fixed-cycle traffic-light (FCTL) queue analysis.
//!
//! The crate evaluates the stationary overflow queue `X_g` at the end of the
//! green period, both exactly (a contour-integral transform checked against a
//! slot-level Markov chain) and through heavy-traffic approximations built on
//! the maximum of a Gaussian random walk. On top of that sit green-time
//! allocation rules for multi-lane intersections and Webster-style delay
//! formulas.
//!
//! ```
//! use fctl_core::{ArrivalModel, FctlInstance, GreenTime};
//!
//! let lane = ArrivalModel::poisson(0.3).unwrap();
//! let inst = FctlInstance::new(lane, GreenTime::deterministic(10), 30.0).unwrap();
//! let mean = fctl_core::transform::mean_overflow(&inst).unwrap();
//! assert!(mean > 0.0);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod arrivals;
pub mod delay;
pub mod error;
pub mod gauss_rw;
pub mod ht_approx;
pub mod oracle;
pub mod quadrature;
pub mod reproduce;
pub mod special;
pub mod transform;

pub use allocation::{
    AllocationMethod, AllocationResult, IntersectionSpec, LaneSpec, RoundingPolicy,
};
pub use arrivals::{ArrivalKind, ArrivalModel, ArrivalSpec};
pub use error::{FctlError, Result};
pub use gauss_rw::GKernel;
pub use quadrature::QuadraturePolicy;
pub use transform::{FctlInstance, GreenTime, SaddleInfo};
