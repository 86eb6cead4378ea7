//! Boustrophedon coverage planning for vehicles with a minimum turning
//! radius, single or split across a fleet.

pub mod dubins;
pub mod partition;
pub mod plan;
pub mod polygon;
pub mod transects;

pub use dubins::{dubins_connect, DubinsPath, PathKind, Pose};
pub use partition::{partition, Partition};
pub use plan::{
    circumradius, coverage_of_segments, coverage_ratio, densify, min_turn_radius, plan,
    plan_vehicle, CoveragePlan, PlanPoint, VehiclePlan, MIN_TURN_SAMPLES,
};
pub use polygon::Polygon;
pub use transects::{transect_count, transects, SurveyArea, Transect};
