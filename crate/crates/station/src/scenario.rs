//! Scenario files: one TOML document fully determines a run.
//!
//! ```toml
//! seed = 7
//! duration = 600.0
//! origin = { lat = 34.0, lon = -81.0 }
//!
//! [environment]
//! current = { kind = "uniform", east = 0.0, north = 0.0 }
//! depth = { kind = "ramp", base = 2.0, gradient_east = 0.01, gradient_north = 0.0 }
//!
//! [[vehicle]]
//! sys_id = 1
//! start = { east = 0.0, north = 0.0 }
//! mission = { delivery = "upload", points = [[0.0, 100.0], [20.0, 100.0]] }
//! ```
//!
//! Every table is optional except `origin`; see the field docs below for
//! defaults. Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use asv_core::autopilot::{AutopilotConfig, Mission, Mode, PidGains, SafetyInputs, Waypoint};
use asv_core::coverage::{plan, Polygon, SurveyArea};
use asv_core::env::{DepthModel, EnvironmentField, FlowField, GridSampler};
use asv_core::geo::{geo_to_local, local_to_geo, GeoPoint, Heading, LocalPoint, Vector2};
use asv_core::link::LinkModel;
use asv_core::sensing::{AerationModel, SensorNoise};
use asv_core::vehicle::VehicleParams;
use serde::{Deserialize, Serialize};

use crate::envgrid;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// Root of every random stream in the run.
    #[serde(default)]
    pub seed: u64,
    /// Simulated seconds.
    #[serde(default = "defaults::duration")]
    pub duration: f64,
    /// Control and integration step, s.
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    /// Simulated seconds per wall-clock second when serving; 0 runs flat out.
    #[serde(default = "defaults::time_scale")]
    pub time_scale: f64,
    pub origin: GeoPoint,
    #[serde(default)]
    pub environment: EnvironmentSpec,
    #[serde(default)]
    pub link: LinkModel,
    #[serde(default)]
    pub gcs: GcsSpec,
    #[serde(default)]
    pub sensors: SensorSpec,
    #[serde(default)]
    pub autopilot: AutopilotConfig,
    #[serde(default, rename = "vehicle")]
    pub vehicles: Vec<VehicleSpec>,
    #[serde(default)]
    pub survey: Option<SurveySpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

mod defaults {
    pub fn duration() -> f64 {
        600.0
    }
    pub fn dt() -> f64 {
        0.05
    }
    pub fn time_scale() -> f64 {
        1.0
    }
    pub fn yes() -> bool {
        true
    }
    pub fn speed() -> f64 {
        4.0
    }
    pub fn mission_id() -> u16 {
        1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowSpec {
    Uniform {
        east: f64,
        north: f64,
    },
    Shear {
        axis_east: f64,
        axis_north: f64,
        direction_deg: f64,
        peak: f64,
        half_width: f64,
    },
    Vortex {
        center_east: f64,
        center_north: f64,
        peak: f64,
        core_radius: f64,
    },
    /// Read from the environment grid file.
    Grid,
}

impl Default for FlowSpec {
    fn default() -> Self {
        FlowSpec::Uniform {
            east: 0.0,
            north: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DepthSpec {
    Flat {
        depth: f64,
    },
    Ramp {
        base: f64,
        gradient_east: f64,
        gradient_north: f64,
    },
    Grid,
}

impl Default for DepthSpec {
    fn default() -> Self {
        DepthSpec::Flat { depth: 5.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub current: FlowSpec,
    pub wind: FlowSpec,
    pub depth: DepthSpec,
    /// Environment grid file, relative to the scenario file.
    pub grid_file: Option<PathBuf>,
    /// Cap on current speed, m/s.
    pub current_limit: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GcsSpec {
    pub position: LocalPoint,
    pub heartbeat_period: f64,
    pub telemetry_period: f64,
}

impl Default for GcsSpec {
    fn default() -> Self {
        GcsSpec {
            position: LocalPoint::ORIGIN,
            heartbeat_period: 1.0,
            telemetry_period: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSpec {
    pub noise: SensorNoise,
    pub aeration: AerationModel,
    pub depth_rate_hz: f64,
    pub vector_rate_hz: f64,
    /// Forward every sample to the ground station as a sensor report.
    pub report_to_gcs: bool,
}

impl Default for SensorSpec {
    fn default() -> Self {
        SensorSpec {
            noise: SensorNoise::default(),
            aeration: AerationModel::default(),
            depth_rate_hz: 2.0,
            vector_rate_hz: 1.0,
            report_to_gcs: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(default, deny_unknown_fields)]
pub struct SensorToggles {
    pub depth: bool,
    pub wind: bool,
    pub current: bool,
}

impl Default for SensorToggles {
    fn default() -> Self {
        SensorToggles {
            depth: true,
            wind: true,
            current: true,
        }
    }
}

/// A transmitter held at fixed stick and switch positions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RcSpec {
    pub ch1_us: u16,
    pub ch3_us: u16,
    /// Mode switch; defaults to the pulse selecting the vehicle's mode.
    pub ch5_us: Option<u16>,
    pub ch6_us: u16,
    /// Radio goes silent from this time on, s.
    pub lost_at: Option<f64>,
}

impl Default for RcSpec {
    fn default() -> Self {
        RcSpec {
            ch1_us: 1500,
            ch3_us: 1500,
            ch5_us: None,
            ch6_us: 1900,
            lost_at: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SafetySpec {
    pub hw_manual_switch: bool,
    pub kill_override: bool,
    pub autopilot_powered: bool,
    pub kill_line_high: bool,
    /// Autopilot power fails at this time, s.
    pub power_lost_at: Option<f64>,
}

impl Default for SafetySpec {
    fn default() -> Self {
        let s = SafetyInputs::default();
        SafetySpec {
            hw_manual_switch: s.hw_manual_switch,
            kill_override: s.kill_override,
            autopilot_powered: s.autopilot_powered,
            kill_line_high: s.kill_line_high,
            power_lost_at: None,
        }
    }
}

impl SafetySpec {
    pub fn inputs(&self) -> SafetyInputs {
        SafetyInputs {
            hw_manual_switch: self.hw_manual_switch,
            kill_override: self.kill_override,
            autopilot_powered: self.autopilot_powered,
            kill_line_high: self.kill_line_high,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Delivery {
    /// Loaded on board before the run starts.
    Preloaded,
    /// Sent by the ground station at t = 0 and activated on acceptance.
    #[default]
    Upload,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum PointFrame {
    /// `[east, north]` meters from the scenario origin.
    #[default]
    Local,
    /// `[lat, lon]` degrees.
    Geo,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MissionSpec {
    #[serde(default = "defaults::mission_id")]
    pub id: u16,
    #[serde(default)]
    pub delivery: Delivery,
    #[serde(default = "defaults::speed")]
    pub speed: f64,
    #[serde(default)]
    pub frame: PointFrame,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub sys_id: u8,
    #[serde(default)]
    pub start: LocalPoint,
    #[serde(default)]
    pub heading_deg: f64,
    /// Mode at power-up.
    #[serde(default = "VehicleSpec::default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub rc: Option<RcSpec>,
    #[serde(default)]
    pub safety: SafetySpec,
    #[serde(default)]
    pub params: VehicleParams,
    /// Initial fuel, L; a full tank when absent.
    #[serde(default)]
    pub fuel: Option<f64>,
    #[serde(default = "defaults::yes")]
    pub engine_running: bool,
    #[serde(default)]
    pub sensors: SensorToggles,
    /// Per-vehicle heading gains; the `[autopilot]` gains otherwise.
    #[serde(default)]
    pub gains: Option<PidGains>,
    #[serde(default)]
    pub mission: Option<MissionSpec>,
    /// System id written into this vehicle's outgoing frames, if different
    /// from `sys_id` (fault injection).
    #[serde(default)]
    pub wire_id: Option<u8>,
}

impl VehicleSpec {
    fn default_mode() -> Mode {
        Mode::AutoWpOnboard
    }

    pub fn new(sys_id: u8) -> Self {
        VehicleSpec {
            sys_id,
            start: LocalPoint::ORIGIN,
            heading_deg: 0.0,
            mode: Self::default_mode(),
            rc: None,
            safety: SafetySpec::default(),
            params: VehicleParams::default(),
            fuel: None,
            engine_running: true,
            sensors: SensorToggles::default(),
            gains: None,
            mission: None,
            wire_id: None,
        }
    }
}

/// Area survey split across the fleet; missions are assigned to vehicles in
/// `sys_id` order and replace any per-vehicle mission.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SurveySpec {
    /// `[east, north]` vertices, m.
    pub polygon: Vec<[f64; 2]>,
    pub swath: f64,
    /// Number of parts; the fleet size when absent.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub transect_heading_deg: f64,
    #[serde(default = "defaults::speed")]
    pub speed: f64,
    #[serde(default)]
    pub delivery: Delivery,
    /// Id of the first generated mission.
    #[serde(default = "SurveySpec::default_first_id")]
    pub first_mission_id: u16,
}

impl SurveySpec {
    fn default_first_id() -> u16 {
        100
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Export a depth grid with this cell size, m.
    pub depth_grid_cell: Option<f64>,
    /// Cell size used by the ground station's live depth grid, m.
    pub live_grid_cell: f64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            depth_grid_cell: None,
            live_grid_cell: 5.0,
        }
    }
}

/// A mission ready to hand to a vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignedMission {
    pub mission: Mission,
    pub delivery: Delivery,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, column)
}

impl Scenario {
    /// A minimal scenario around `origin` with no vehicles.
    pub fn empty(origin: GeoPoint) -> Self {
        Scenario {
            name: String::new(),
            seed: 0,
            duration: defaults::duration(),
            dt: defaults::dt(),
            time_scale: defaults::time_scale(),
            origin,
            environment: EnvironmentSpec::default(),
            link: LinkModel::default(),
            gcs: GcsSpec::default(),
            sensors: SensorSpec::default(),
            autopilot: AutopilotConfig::default(),
            vehicles: Vec::new(),
            survey: None,
            output: OutputSpec::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |r| line_col(text, r.start));
            ScenarioError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map_or_else(PathBuf::new, Path::to_path_buf);
        Ok((Self::parse(&text)?, base))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.dt > 0.0 && self.dt <= asv_core::vehicle::MAX_STEP) {
            return Err(invalid("dt", "must be in (0, 0.1]"));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid("duration", "must be positive"));
        }
        if !(self.time_scale.is_finite() && self.time_scale >= 0.0) {
            return Err(invalid("time_scale", "must be non-negative"));
        }
        self.origin.validate().map_err(|e| invalid("origin", e))?;
        self.link.validate().map_err(|e| invalid("link", e))?;
        if !self.autopilot.gains.is_valid() {
            return Err(invalid(
                "autopilot.gains",
                "gains must be finite and non-negative, wp_radius positive",
            ));
        }
        for (name, v) in [
            ("gcs.heartbeat_period", self.gcs.heartbeat_period),
            ("gcs.telemetry_period", self.gcs.telemetry_period),
            ("sensors.depth_rate_hz", self.sensors.depth_rate_hz),
            ("sensors.vector_rate_hz", self.sensors.vector_rate_hz),
            ("output.live_grid_cell", self.output.live_grid_cell),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        let mut ids = BTreeSet::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            let field = |f: &str| format!("vehicle[{i}].{f}");
            if v.sys_id == 0 || v.sys_id == 255 {
                return Err(invalid(field("sys_id"), "must be in 1..=254"));
            }
            if !ids.insert(v.sys_id) {
                return Err(invalid(
                    field("sys_id"),
                    format!("duplicate id {}", v.sys_id),
                ));
            }
            v.params
                .validate()
                .map_err(|e| invalid(field("params"), e))?;
            if v.mode == Mode::ManualOnboard && !v.safety.hw_manual_switch {
                return Err(invalid(
                    field("mode"),
                    "MANUAL_ONBOARD is selected by the hardware switch",
                ));
            }
            if let Some(g) = &v.gains {
                if !g.is_valid() {
                    return Err(invalid(field("gains"), "invalid gains"));
                }
            }
            if let Some(f) = v.fuel {
                if !(0.0..=v.params.fuel_capacity).contains(&f) {
                    return Err(invalid(field("fuel"), "must be within the tank capacity"));
                }
            }
            if let Some(m) = &v.mission {
                self.mission_from_spec(m)
                    .map_err(|e| invalid(field("mission"), e))?;
            }
        }
        if let Some(s) = &self.survey {
            if self.vehicles.is_empty() {
                return Err(invalid("survey", "needs at least one vehicle"));
            }
            self.survey_area(s)?;
        }
        Ok(())
    }

    fn to_geo(&self, p: LocalPoint) -> Result<GeoPoint, String> {
        local_to_geo(self.origin, p).map_err(|e| e.to_string())
    }

    pub fn mission_from_spec(&self, m: &MissionSpec) -> Result<Mission, String> {
        if !(m.speed.is_finite() && m.speed >= 0.0) {
            return Err("speed must be non-negative".into());
        }
        let waypoints = m
            .points
            .iter()
            .map(|&[a, b]| {
                let target = match m.frame {
                    PointFrame::Local => self.to_geo(LocalPoint::new(a, b))?,
                    PointFrame::Geo => {
                        let g = GeoPoint::new(a, b).map_err(|e| e.to_string())?;
                        geo_to_local(self.origin, g).map_err(|e| e.to_string())?;
                        g
                    }
                };
                Ok(Waypoint {
                    target,
                    speed: m.speed,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Mission::new(m.id, waypoints, self.origin).map_err(|e| e.to_string())
    }

    fn survey_area(&self, s: &SurveySpec) -> Result<SurveyArea, ScenarioError> {
        let pts = s
            .polygon
            .iter()
            .map(|&[e, n]| LocalPoint::new(e, n))
            .collect();
        let poly = Polygon::new(pts).map_err(|e| invalid("survey.polygon", e))?;
        let heading = Heading::from_degrees(s.transect_heading_deg)
            .map_err(|e| invalid("survey.transect_heading_deg", e))?;
        SurveyArea::new(poly, s.swath, heading).map_err(|e| invalid("survey.swath", e))
    }

    /// Missions per vehicle (`sys_id` order), from the survey when present.
    pub fn missions(&self) -> Result<Vec<Option<AssignedMission>>, ScenarioError> {
        let Some(s) = &self.survey else {
            return self
                .vehicles
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.mission
                        .as_ref()
                        .map(|m| {
                            let mission = self
                                .mission_from_spec(m)
                                .map_err(|e| invalid(format!("vehicle[{i}].mission"), e))?;
                            Ok(AssignedMission {
                                mission,
                                delivery: m.delivery,
                            })
                        })
                        .transpose()
                })
                .collect();
        };
        let area = self.survey_area(s)?;
        let mut order: Vec<usize> = (0..self.vehicles.len()).collect();
        order.sort_by_key(|&i| self.vehicles[i].sys_id);
        let k =
            s.k.unwrap_or(self.vehicles.len())
                .min(self.vehicles.len())
                .max(1);
        let entries: Vec<LocalPoint> = order
            .iter()
            .take(k)
            .map(|&i| self.vehicles[i].start)
            .collect();
        let r_min = order
            .iter()
            .map(|&i| self.vehicles[i].params.r_min)
            .fold(0.0, f64::max);
        let cp = plan(&area, k, r_min, &entries).map_err(|e| invalid("survey", e))?;
        let mut out = vec![None; self.vehicles.len()];
        for (n, vp) in cp.vehicles.iter().enumerate() {
            let waypoints = vp
                .points()
                .map(|p| {
                    Ok(Waypoint {
                        target: self.to_geo(p).map_err(|e| invalid("survey", e))?,
                        speed: s.speed,
                    })
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            let mission = Mission::new(
                s.first_mission_id.wrapping_add(n as u16),
                waypoints,
                self.origin,
            )
            .map_err(|e| invalid("survey", e))?;
            out[order[n]] = Some(AssignedMission {
                mission,
                delivery: s.delivery,
            });
        }
        Ok(out)
    }

    pub fn environment(&self, base_dir: &Path) -> Result<EnvironmentField, ScenarioError> {
        let env = &self.environment;
        let needs_grid = matches!(env.current, FlowSpec::Grid)
            || matches!(env.wind, FlowSpec::Grid)
            || matches!(env.depth, DepthSpec::Grid);
        let sampler = if needs_grid {
            let rel = env
                .grid_file
                .as_ref()
                .ok_or_else(|| invalid("environment.grid_file", "required by a grid field"))?;
            let path = base_dir.join(rel);
            let grid =
                envgrid::read_file(&path).map_err(|e| invalid("environment.grid_file", e))?;
            let offset = geo_to_local(self.origin, grid.origin)
                .map_err(|e| invalid("environment.grid_file", e))?;
            Some(
                GridSampler::new(Arc::new(grid), offset)
                    .map_err(|e| invalid("environment.grid_file", e))?,
            )
        } else {
            None
        };
        let flow = |spec: &FlowSpec, field: &str| -> Result<FlowField, ScenarioError> {
            Ok(match *spec {
                FlowSpec::Uniform { east, north } => FlowField::Uniform(Vector2::new(east, north)),
                FlowSpec::Shear {
                    axis_east,
                    axis_north,
                    direction_deg,
                    peak,
                    half_width,
                } => FlowField::Shear {
                    axis: LocalPoint::new(axis_east, axis_north),
                    direction: Heading::from_degrees(direction_deg)
                        .map_err(|e| invalid(field, e))?,
                    peak,
                    half_width,
                },
                FlowSpec::Vortex {
                    center_east,
                    center_north,
                    peak,
                    core_radius,
                } => FlowField::Vortex {
                    center: LocalPoint::new(center_east, center_north),
                    peak,
                    core_radius,
                },
                FlowSpec::Grid => FlowField::Grid(sampler.clone().expect("grid loaded above")),
            })
        };
        let current = flow(&env.current, "environment.current")?;
        let wind = flow(&env.wind, "environment.wind")?;
        let depth = match env.depth {
            DepthSpec::Flat { depth } => DepthModel::Flat(depth),
            DepthSpec::Ramp {
                base,
                gradient_east,
                gradient_north,
            } => DepthModel::Ramp {
                base,
                gradient: Vector2::new(gradient_east, gradient_north),
            },
            DepthSpec::Grid => DepthModel::Grid(sampler.clone().expect("grid loaded above")),
        };
        let field = EnvironmentField::new(current, wind, depth);
        Ok(match env.current_limit {
            Some(limit) => field.with_current_limit(limit),
            None => field,
        })
    }
}
