//! Shore-side half of the ASV stack: scenario loading, the multi-vehicle
//! simulator, the ground control station and its HTTP service, log formats
//! and the `asv-sim` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod datafiles;
pub mod envgrid;
pub mod eventlog;
pub mod gcs;
pub mod metrics;
pub mod planning;
pub mod preflight;
pub mod runner;
pub mod scenario;
pub mod server;
pub mod world;
