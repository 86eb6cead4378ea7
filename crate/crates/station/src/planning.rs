//! Coverage-plan requests and mission files, shared by the HTTP service
//! and the command line.
//!
//! A mission file is the JSON body accepted by `POST /vehicle/{id}/mission`:
//! `{"mission_id":1,"home":{"lat":..,"lon":..},"waypoints":[{"lat":..,"lon":..,"speed":4.0}],"activate":"AUTO_WP_OFFBOARD"}`.

use asv_core::autopilot::{Mission, Mode, Waypoint};
use asv_core::coverage::{min_turn_radius, plan, Polygon, SurveyArea};
use asv_core::geo::{local_to_geo, GeoPoint, Heading, LocalPoint};
use asv_core::vehicle::VehicleParams;
use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("polygon must be closed: repeat the first vertex at the end")]
    NotClosed,
    #[error("{0}")]
    Invalid(String),
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::NotClosed => "polygon_not_closed",
            PlanError::Invalid(_) => "invalid_plan",
        }
    }
}

fn one() -> usize {
    1
}

fn default_r_min() -> f64 {
    VehicleParams::default().r_min
}

fn default_speed() -> f64 {
    4.0
}

fn default_mission_id() -> u16 {
    1
}

/// Survey request. Points are local (east, north) meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    /// Closed boundary: the last vertex repeats the first.
    pub polygon: Vec<[f64; 2]>,
    pub swath: f64,
    #[serde(default = "one")]
    pub k: usize,
    /// Transect direction, degrees clockwise from north.
    #[serde(default)]
    pub heading_deg: f64,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    /// One entry point per vehicle; defaults to the first polygon vertex.
    #[serde(default)]
    pub entries: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default = "default_mission_id")]
    pub first_mission_id: u16,
}

impl PlanRequest {
    /// The request equivalent to a scenario's survey section: one vehicle
    /// per entry in `sys_id` order, starting where the boats start.
    pub fn from_scenario(sc: &Scenario) -> Option<PlanRequest> {
        let survey = sc.survey.as_ref()?;
        let mut vs: Vec<_> = sc.vehicles.iter().collect();
        vs.sort_by_key(|v| v.sys_id);
        let k = survey.k.unwrap_or(vs.len()).min(vs.len()).max(1);
        let mut polygon = survey.polygon.clone();
        if let Some(&first) = polygon.first() {
            if polygon.last() != Some(&first) {
                polygon.push(first);
            }
        }
        Some(PlanRequest {
            polygon,
            swath: survey.swath,
            k,
            heading_deg: survey.transect_heading_deg,
            r_min: vs.iter().map(|v| v.params.r_min).fold(0.0, f64::max),
            entries: Some(
                vs.iter()
                    .take(k)
                    .map(|v| [v.start.east, v.start.north])
                    .collect(),
            ),
            speed: survey.speed,
            first_mission_id: survey.first_mission_id,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPoint {
    pub east: f64,
    pub north: f64,
    pub lat: f64,
    pub lon: f64,
    pub turn: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedVehicle {
    pub index: usize,
    pub mission_id: u16,
    pub entry: [f64; 2],
    pub transects: usize,
    pub length: f64,
    pub min_turn_radius: f64,
    pub waypoints: Vec<PlannedPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResponse {
    pub coverage_ratio: f64,
    pub swath: f64,
    pub r_min: f64,
    pub warning: Option<String>,
    pub vehicles: Vec<PlannedVehicle>,
}

fn invalid(e: impl std::fmt::Display) -> PlanError {
    PlanError::Invalid(e.to_string())
}

pub fn plan_request(req: &PlanRequest, origin: GeoPoint) -> Result<PlanResponse, PlanError> {
    if req.polygon.len() < 4 || req.polygon.first() != req.polygon.last() {
        return Err(PlanError::NotClosed);
    }
    if req.k == 0 {
        return Err(PlanError::Invalid("k must be at least 1".into()));
    }
    if !(req.speed.is_finite() && req.speed >= 0.0) {
        return Err(PlanError::Invalid("speed must be non-negative".into()));
    }
    let pts: Vec<LocalPoint> = req
        .polygon
        .iter()
        .map(|&[e, n]| LocalPoint::new(e, n))
        .collect();
    let poly = Polygon::new(pts).map_err(invalid)?;
    let heading = Heading::from_degrees(req.heading_deg).map_err(invalid)?;
    let area = SurveyArea::new(poly, req.swath, heading).map_err(invalid)?;
    let entries: Vec<LocalPoint> = match &req.entries {
        Some(e) => e.iter().map(|&[x, y]| LocalPoint::new(x, y)).collect(),
        None => vec![LocalPoint::new(req.polygon[0][0], req.polygon[0][1]); req.k],
    };
    let cp = plan(&area, req.k, req.r_min, &entries).map_err(invalid)?;
    let vehicles = cp
        .vehicles
        .iter()
        .enumerate()
        .map(|(i, vp)| {
            let waypoints = vp
                .waypoints
                .iter()
                .map(|p| {
                    let g = local_to_geo(origin, p.pos).map_err(invalid)?;
                    Ok(PlannedPoint {
                        east: p.pos.east,
                        north: p.pos.north,
                        lat: g.lat,
                        lon: g.lon,
                        turn: p.turn,
                    })
                })
                .collect::<Result<Vec<_>, PlanError>>()?;
            Ok(PlannedVehicle {
                index: i,
                mission_id: req.first_mission_id.wrapping_add(i as u16),
                entry: [vp.entry.east, vp.entry.north],
                transects: vp.transects.len(),
                length: vp.length(),
                min_turn_radius: min_turn_radius(&vp.waypoints),
                waypoints,
            })
        })
        .collect::<Result<Vec<_>, PlanError>>()?;
    Ok(PlanResponse {
        coverage_ratio: cp.coverage_ratio,
        swath: cp.swath,
        r_min: cp.r_min,
        warning: cp.warning.map(str::to_string),
        vehicles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointBody {
    pub lat: f64,
    pub lon: f64,
    pub speed: f64,
}

fn default_activate() -> Option<Mode> {
    Some(Mode::AutoWpOffboard)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionBody {
    /// Defaults to one past the last id uploaded to the vehicle.
    #[serde(default)]
    pub mission_id: Option<u16>,
    #[serde(default)]
    pub home: Option<GeoPoint>,
    pub waypoints: Vec<WaypointBody>,
    /// Mode to enter once the vehicle accepts; `null` leaves the mode alone.
    #[serde(default = "default_activate")]
    pub activate: Option<Mode>,
}

impl MissionBody {
    pub fn from_plan(v: &PlannedVehicle, speed: f64, home: GeoPoint) -> Self {
        MissionBody {
            mission_id: Some(v.mission_id),
            home: Some(home),
            waypoints: v
                .waypoints
                .iter()
                .map(|p| WaypointBody {
                    lat: p.lat,
                    lon: p.lon,
                    speed,
                })
                .collect(),
            activate: default_activate(),
        }
    }

    pub fn to_mission(&self, default_id: u16, default_home: GeoPoint) -> Result<Mission, String> {
        let waypoints = self
            .waypoints
            .iter()
            .map(|w| {
                Ok(Waypoint {
                    target: GeoPoint::new(w.lat, w.lon).map_err(|e| e.to_string())?,
                    speed: w.speed,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Mission::new(
            self.mission_id.unwrap_or(default_id),
            waypoints,
            self.home.unwrap_or(default_home),
        )
        .map_err(|e| e.to_string())
    }
}
