//! Core models for a simulated autonomous surface vehicle.
//!
//! Everything here is `no_std` with `alloc`: coordinate frames and
//! environment fields, the boat plant model, the onboard autopilot, the
//! binary telemetry codec and link model, boustrophedon coverage planning
//! for Dubins vehicles, and the sensing pipeline. File formats, logging and
//! the ground station live in the `asv-station` crate.

#![no_std]
// `!(x > 0.0)` is how NaN is rejected throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autopilot;
pub mod coverage;
pub mod env;
pub mod error;
pub mod geo;
pub mod link;
pub mod sensing;
pub mod vehicle;

pub use error::{Error, Result};
