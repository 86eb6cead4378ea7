//! Simulated depth, wind and current sensing, boat-to-world conversion,
//! outlier rejection and depth gridding.

pub mod filter;
pub mod grid;
pub mod sample;
pub mod sim;

pub use filter::{filter_outliers, OutlierFilter};
pub use grid::{grid_depth, DepthGrid};
pub use sample::{Quality, SensorKind, SensorSample};
pub use sim::{
    measure_relative, sample_depth, sample_vector, to_world, AerationModel, SensorNoise,
};
