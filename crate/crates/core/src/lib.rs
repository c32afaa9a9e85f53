//! Simulation library for the secretary problem with adversarially timed
//! (red) elements mixed into a uniformly random (green) arrival order.
//!
//! Policies never see colors. The evaluator in [`model::run_policy`] feeds
//! them arrivals one by one and enforces feasibility; [`harness`] runs seeded
//! Monte Carlo experiments and reports success rates and value ratios against
//! the leave-one-out benchmark.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversaries;
pub mod error;
pub mod harness;
pub mod matroid;
pub mod model;
pub mod multi_select;
pub mod single_item;
pub mod subroutines;

pub use error::{BsecError, Result};
