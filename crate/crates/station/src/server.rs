//! HTTP interface of the ground station.
//!
//! | method | path | body / query | reply |
//! |---|---|---|---|
//! | GET | `/fleet` | | `{"t":..,"vehicles":[VehicleView]}` |
//! | GET | `/vehicle/{id}` | | `VehicleView` |
//! | POST | `/vehicle/{id}/mode` | `{"mode":"VELOCITY_CONTROL"}` | 202 `CommandReply` |
//! | POST | `/vehicle/{id}/kill` | none | 202 `CommandReply` |
//! | POST | `/vehicle/{id}/velocity` | `{"steering":0.2,"speed":3.0}` | 202 `CommandReply` |
//! | POST | `/vehicle/{id}/mission` | mission file | 202 `CommandReply` |
//! | POST | `/vehicle/{id}/preflight` | none | `ChecklistReport` |
//! | GET | `/plan` | `?polygon=0,0;100,0;100,100;0,100;0,0&swath=10&k=3&r_min=5` | `PlanResponse` |
//! | POST | `/plan` | `PlanRequest` | `PlanResponse` |
//! | GET | `/grids/depth` | `?cell=5&format=json\|text` | live depth grid |
//! | GET | `/stream` | | downlink frames |
//!
//! `GET /plan` fills any parameter it is not given from the scenario
//! survey; with no parameters at all it returns the scenario's own plan.
//! The query also accepts `heading_deg` and `speed`.
//!
//! Errors are `{"error":{"code":"link_lost","message":"..."}}` with a 4xx
//! status. `/stream` is an endless `application/octet-stream` body in which
//! every downlink frame the station receives appears as a little-endian
//! `u32` length followed by the raw frame bytes.

use std::convert::Infallible;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use asv_core::autopilot::Mode;
use axum::body::Body;
use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast;

use crate::envgrid;
use crate::gcs::{GcsCommand, GcsError, VehicleView};
use crate::planning::{plan_request, MissionBody, PlanError, PlanRequest, PlanResponse};
use crate::preflight::{self, ChecklistReport};
use crate::world::{build_depth_grid, World};

#[derive(Clone)]
pub struct AppState {
    pub world: Arc<Mutex<World>>,
    pub frames: broadcast::Sender<Vec<u8>>,
}

impl AppState {
    pub fn new(mut world: World) -> Self {
        world.enable_stream();
        let (frames, _) = broadcast::channel(4096);
        AppState {
            world: Arc::new(Mutex::new(world)),
            frames,
        }
    }

    pub fn lock(&self) -> MutexGuard<'_, World> {
        self.world.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Forwards queued downlink frames to stream subscribers.
    pub fn publish(&self) {
        let frames = self.lock().take_stream();
        for f in frames {
            let _ = self.frames.send(f);
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "error": { "code": self.code, "message": self.message } })),
        )
            .into_response()
    }
}

impl From<GcsError> for ApiError {
    fn from(e: GcsError) -> Self {
        let status = match e {
            GcsError::UnknownVehicle(_) => StatusCode::NOT_FOUND,
            GcsError::LinkLost(_) | GcsError::UploadInProgress(_) => StatusCode::CONFLICT,
            GcsError::InvalidMission(_) | GcsError::InvalidCommand(_) => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<PlanError> for ApiError {
    fn from(e: PlanError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(e: PathRejection) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_vehicle", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandReply {
    pub sys_id: u8,
    pub command: String,
    pub t: f64,
}

#[derive(Debug, Serialize)]
struct FleetReply {
    t: f64,
    quarantined: u64,
    vehicles: Vec<VehicleView>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeBody {
    mode: Mode,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VelocityBody {
    steering: f64,
    speed: f64,
}

#[derive(Debug, Deserialize)]
struct GridQuery {
    cell: Option<f64>,
    format: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanQuery {
    polygon: Option<String>,
    swath: Option<f64>,
    k: Option<usize>,
    r_min: Option<f64>,
    heading_deg: Option<f64>,
    speed: Option<f64>,
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "bad_request", msg)
}

/// `e,n;e,n;...` in local meters.
fn parse_polygon(s: &str) -> Result<Vec<[f64; 2]>, ApiError> {
    s.split(';')
        .map(|p| {
            let (e, n) = p
                .split_once(',')
                .ok_or_else(|| bad_request(format!("bad vertex `{p}`")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| bad_request(format!("bad vertex `{p}`")))
            };
            Ok([num(e)?, num(n)?])
        })
        .collect()
}

impl PlanQuery {
    fn into_request(self, base: Option<PlanRequest>) -> Result<PlanRequest, ApiError> {
        let polygon = match self.polygon.as_deref() {
            Some(p) => parse_polygon(p)?,
            None => base.as_ref().map(|b| b.polygon.clone()).ok_or_else(|| {
                ApiError::new(
                    StatusCode::NOT_FOUND,
                    "no_survey",
                    "no polygon given and the scenario has no survey",
                )
            })?,
        };
        let swath = self
            .swath
            .or(base.as_ref().map(|b| b.swath))
            .ok_or_else(|| bad_request("swath is required"))?;
        let base = base.unwrap_or(PlanRequest {
            polygon: Vec::new(),
            swath,
            k: 1,
            heading_deg: 0.0,
            r_min: asv_core::vehicle::VehicleParams::default().r_min,
            entries: None,
            speed: 4.0,
            first_mission_id: 1,
        });
        let k = self.k.unwrap_or(base.k);
        let entries = match base.entries {
            Some(e) if self.polygon.is_none() && e.len() == k => Some(e),
            _ => None,
        };
        Ok(PlanRequest {
            polygon,
            swath,
            k,
            heading_deg: self.heading_deg.unwrap_or(base.heading_deg),
            r_min: self.r_min.unwrap_or(base.r_min),
            entries,
            speed: self.speed.unwrap_or(base.speed),
            first_mission_id: base.first_mission_id,
        })
    }
}

async fn fleet(State(s): State<AppState>) -> Json<FleetReply> {
    let w = s.lock();
    Json(FleetReply {
        t: w.now(),
        quarantined: w.gcs().quarantined(),
        vehicles: w.fleet(),
    })
}

async fn vehicle(
    State(s): State<AppState>,
    id: Result<Path<u8>, PathRejection>,
) -> ApiResult<Json<VehicleView>> {
    let Path(id) = id?;
    Ok(Json(s.lock().view(id)?))
}

fn command(s: &AppState, id: u8, cmd: GcsCommand) -> ApiResult<(StatusCode, Json<CommandReply>)> {
    let mut w = s.lock();
    w.command(id, cmd)?;
    Ok((
        StatusCode::ACCEPTED,
        Json(CommandReply {
            sys_id: id,
            command: cmd.describe(),
            t: w.now(),
        }),
    ))
}

async fn set_mode(
    State(s): State<AppState>,
    id: Result<Path<u8>, PathRejection>,
    body: Result<Json<ModeBody>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<CommandReply>)> {
    let Path(id) = id?;
    let Json(b) = body?;
    command(&s, id, GcsCommand::SetMode(b.mode))
}

async fn kill(
    State(s): State<AppState>,
    id: Result<Path<u8>, PathRejection>,
) -> ApiResult<(StatusCode, Json<CommandReply>)> {
    let Path(id) = id?;
    command(&s, id, GcsCommand::Kill)
}

async fn velocity(
    State(s): State<AppState>,
    id: Result<Path<u8>, PathRejection>,
    body: Result<Json<VelocityBody>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<CommandReply>)> {
    let Path(id) = id?;
    let Json(b) = body?;
    command(
        &s,
        id,
        GcsCommand::Velocity {
            steering: b.steering,
            speed: b.speed,
        },
    )
}

async fn mission(
    State(s): State<AppState>,
    id: Result<Path<u8>, PathRejection>,
    body: Result<Json<MissionBody>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<CommandReply>)> {
    let Path(id) = id?;
    let Json(b) = body?;
    let mut w = s.lock();
    let default_id = w.gcs().next_mission_id(id);
    let origin = w.scenario().origin;
    let m = b
        .to_mission(default_id, origin)
        .map_err(|e| ApiError::from(GcsError::InvalidMission(e)))?;
    let describe = format!("upload {} {}", m.id, m.waypoints.len());
    w.upload(id, m, b.activate)?;
    Ok((
        StatusCode::ACCEPTED,
        Json(CommandReply {
            sys_id: id,
            command: describe,
            t: w.now(),
        }),
    ))
}

async fn run_preflight(
    State(s): State<AppState>,
    id: Result<Path<u8>, PathRejection>,
) -> ApiResult<Json<ChecklistReport>> {
    let Path(id) = id?;
    let w = s.lock();
    Ok(Json(preflight::run(&w, id)?))
}

async fn query_plan(
    State(s): State<AppState>,
    q: Result<Query<PlanQuery>, QueryRejection>,
) -> ApiResult<Json<PlanResponse>> {
    let Query(q) = q?;
    let (base, origin) = {
        let w = s.lock();
        (
            PlanRequest::from_scenario(w.scenario()),
            w.scenario().origin,
        )
    };
    let req = q.into_request(base)?;
    Ok(Json(plan_request(&req, origin)?))
}

async fn new_plan(
    State(s): State<AppState>,
    body: Result<Json<PlanRequest>, JsonRejection>,
) -> ApiResult<Json<PlanResponse>> {
    let Json(req) = body?;
    let origin = s.lock().scenario().origin;
    // planning runs outside the lock
    Ok(Json(plan_request(&req, origin)?))
}

async fn depth_grid(
    State(s): State<AppState>,
    q: Result<Query<GridQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = q?;
    let (samples, default_cell) = {
        let w = s.lock();
        (
            w.gcs().reports().to_vec(),
            w.scenario().output.live_grid_cell,
        )
    };
    let cell = q.cell.unwrap_or(default_cell);
    if !(cell.is_finite() && cell > 0.0) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_request",
            "cell must be positive",
        ));
    }
    let grid = build_depth_grid(&samples, cell)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))?;
    if grid.is_empty() {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "no_depth_data",
            "no depth reports received yet",
        ));
    }
    match q.format.as_deref().unwrap_or("json") {
        "json" => {
            let rows: Vec<Vec<Option<f64>>> = (0..grid.rows)
                .map(|r| (0..grid.cols).map(|c| grid.get(r, c)).collect())
                .collect();
            let counts: Vec<&[u32]> = grid.counts.chunks(grid.cols.max(1)).collect();
            Ok(Json(json!({
                "origin": grid.origin,
                "cell_size": grid.cell_size,
                "rows": grid.rows,
                "cols": grid.cols,
                "depth": rows,
                "counts": counts,
                "populated": grid.populated(),
                "interpolated": grid.interpolated(),
            }))
            .into_response())
        }
        "text" => {
            let env = grid.to_env_grid().map_err(|e| {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            })?;
            Ok((
                [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
                envgrid::write(&env),
            )
                .into_response())
        }
        other => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_request",
            format!("unknown format `{other}` (json or text)"),
        )),
    }
}

/// Length-prefixed frame as it appears on `/stream`.
pub fn stream_chunk(frame: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + frame.len());
    out.extend_from_slice(&(frame.len() as u32).to_le_bytes());
    out.extend_from_slice(frame);
    out
}

async fn stream(State(s): State<AppState>) -> Response {
    let rx = s.frames.subscribe();
    let body = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(f) => return Some((Ok::<_, Infallible>(stream_chunk(&f)), rx)),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    (
        [(header::CONTENT_TYPE, "application/octet-stream")],
        Body::from_stream(body),
    )
        .into_response()
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/fleet", get(fleet))
        .route("/vehicle/{id}", get(vehicle))
        .route("/vehicle/{id}/mode", post(set_mode))
        .route("/vehicle/{id}/kill", post(kill))
        .route("/vehicle/{id}/velocity", post(velocity))
        .route("/vehicle/{id}/mission", post(mission))
        .route("/vehicle/{id}/preflight", post(run_preflight))
        .route("/plan", get(query_plan).post(new_plan))
        .route("/grids/depth", get(depth_grid))
        .route("/stream", get(stream))
        .fallback(not_found)
        .with_state(state)
}

/// Steps the world in real time scaled by `time_scale` until the scenario
/// ends, publishing downlink frames as they arrive.
pub async fn simulate(state: AppState, time_scale: f64) -> Result<(), crate::world::WorldError> {
    let mut ticker = tokio::time::interval(Duration::from_millis(20));
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    let start = Instant::now();
    let t0 = state.lock().now();
    loop {
        ticker.tick().await;
        let done = {
            let mut w = state.lock();
            // zero runs flat out, one chunk per interval
            let target = if time_scale > 0.0 {
                t0 + start.elapsed().as_secs_f64() * time_scale
            } else {
                w.now() + 10.0
            };
            w.run_until(target)?;
            w.now() + 0.5 * w.scenario().dt >= w.scenario().duration
        };
        state.publish();
        if done {
            state.lock().finish()?;
            return Ok(());
        }
    }
}
