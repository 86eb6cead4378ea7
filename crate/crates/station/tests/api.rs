use asv_core::link::{decode, Message};
use asv_station::runner::replay_stream;
use asv_station::scenario::Scenario;
use asv_station::server::{router, stream_chunk, AppState};
use asv_station::world::{Sinks, World, EVENT_LOG};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const FLEET: &str = r#"
seed = 4
duration = 120.0
origin = { lat = 34.0, lon = -81.0 }

[[vehicle]]
sys_id = 1
mode = "AUTO_WP_OFFBOARD"

[[vehicle]]
sys_id = 2
start = { east = 30.0, north = 0.0 }
mode = "AUTO_WP_ONBOARD"
mission = { delivery = "preloaded", points = [[30.0, 80.0], [60.0, 80.0]] }
"#;

fn state(toml: &str) -> AppState {
    let s = Scenario::parse(toml).unwrap();
    let env = s.environment(std::path::Path::new(".")).unwrap();
    AppState::new(World::new(s, env, Sinks::none()).unwrap())
}

async fn call(s: &AppState, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = router(s.clone())
        .oneshot(req.body(body).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = serde_json::from_slice(&bytes)
        .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, v)
}

fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap_or("")
}

#[tokio::test]
async fn fleet_and_vehicle_views() {
    let s = state(FLEET);
    s.lock().run_until(3.0).unwrap();
    let (st, v) = call(&s, "GET", "/fleet", None).await;
    assert_eq!(st, StatusCode::OK);
    let vehicles = v["vehicles"].as_array().unwrap();
    assert_eq!(vehicles.len(), 2);
    assert_eq!(vehicles[0]["link"], "connected");
    assert_eq!(vehicles[1]["mode"], "AUTO_WP_ONBOARD");

    let (st, v) = call(&s, "GET", "/vehicle/2", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["sys_id"], 2);
    assert_eq!(v["engine"], "running");
}

#[tokio::test]
async fn unknown_vehicle_and_route_are_404() {
    let s = state(FLEET);
    let (st, v) = call(&s, "GET", "/vehicle/9", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&v), "unknown_vehicle");
    let (st, v) = call(&s, "POST", "/vehicle/abc/kill", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&v), "unknown_vehicle");
    let (st, v) = call(&s, "GET", "/nowhere", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&v), "not_found");
}

#[tokio::test]
async fn commands_are_accepted_and_validated() {
    let s = state(FLEET);
    s.lock().run_until(2.0).unwrap();
    let (st, v) = call(
        &s,
        "POST",
        "/vehicle/1/mode",
        Some(json!({"mode": "VELOCITY_CONTROL"})),
    )
    .await;
    assert_eq!(st, StatusCode::ACCEPTED, "{v}");
    assert_eq!(v["sys_id"], 1);

    let (st, v) = call(
        &s,
        "POST",
        "/vehicle/1/mode",
        Some(json!({"mode": "MANUAL_ONBOARD"})),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "invalid_command");

    let (st, _) = call(
        &s,
        "POST",
        "/vehicle/1/velocity",
        Some(json!({"steering": 0.2, "speed": 3.0})),
    )
    .await;
    assert_eq!(st, StatusCode::ACCEPTED);
    let (st, v) = call(
        &s,
        "POST",
        "/vehicle/1/velocity",
        Some(json!({"steering": 4.0, "speed": 3.0})),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "invalid_command");

    let (st, v) = call(
        &s,
        "POST",
        "/vehicle/1/mode",
        Some(json!({"mode": "SAILING"})),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "bad_request");

    s.lock().run_until(4.0).unwrap();
    assert_eq!(
        s.lock().vehicle(1).unwrap().autopilot.mode(),
        asv_core::autopilot::Mode::VelocityControl
    );
}

#[tokio::test]
async fn kill_reaches_the_vehicle() {
    let s = state(FLEET);
    s.lock().run_until(2.0).unwrap();
    let (st, v) = call(&s, "POST", "/vehicle/2/kill", None).await;
    assert_eq!(st, StatusCode::ACCEPTED);
    assert_eq!(v["command"], "kill");
    // within one telemetry period plus the link delay both ways
    s.lock().run_until(2.5).unwrap();
    let (_, v) = call(&s, "GET", "/vehicle/2", None).await;
    assert_eq!(v["engine"], "killed");
}

#[tokio::test]
async fn lost_link_refuses_mode_but_queues_kill() {
    let s = state(
        r#"
duration = 60.0
origin = { lat = 34.0, lon = -81.0 }
link = { base_loss = 1.0 }
[[vehicle]]
sys_id = 1
"#,
    );
    s.lock().run_until(5.0).unwrap();
    let (_, v) = call(&s, "GET", "/vehicle/1", None).await;
    assert_eq!(v["link"], "lost");
    let (st, v) = call(
        &s,
        "POST",
        "/vehicle/1/mode",
        Some(json!({"mode": "AUTO_WP_ONBOARD"})),
    )
    .await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(error_code(&v), "link_lost");
    let (st, v) = call(
        &s,
        "POST",
        "/vehicle/1/mission",
        Some(json!({"waypoints": [{"lat": 34.0005, "lon": -81.0, "speed": 3.0}]})),
    )
    .await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(error_code(&v), "link_lost");
    let (st, _) = call(&s, "POST", "/vehicle/1/kill", None).await;
    assert_eq!(st, StatusCode::ACCEPTED);
}

#[tokio::test]
async fn mission_upload_activates_on_acceptance() {
    let s = state(FLEET);
    s.lock().run_until(2.0).unwrap();
    let body = json!({
        "mission_id": 17,
        "waypoints": [
            {"lat": 34.0004, "lon": -81.0, "speed": 3.0},
            {"lat": 34.0004, "lon": -80.9998, "speed": 3.0}
        ]
    });
    let (st, v) = call(&s, "POST", "/vehicle/1/mission", Some(body.clone())).await;
    assert_eq!(st, StatusCode::ACCEPTED, "{v}");
    assert_eq!(v["command"], "upload 17 2");
    let (st, v) = call(&s, "POST", "/vehicle/1/mission", Some(body)).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(error_code(&v), "upload_in_progress");

    s.lock().run_until(6.0).unwrap();
    let (_, v) = call(&s, "GET", "/vehicle/1", None).await;
    assert_eq!(v["upload"]["phase"], "accepted");
    assert_eq!(v["upload"]["activated"], true);
    assert_eq!(v["mission_id"], 17);
    assert_eq!(v["mode"], "AUTO_WP_OFFBOARD");

    let (st, v) = call(
        &s,
        "POST",
        "/vehicle/1/mission",
        Some(json!({"waypoints": []})),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "invalid_mission");
}

#[tokio::test]
async fn plan_endpoint() {
    let s = state(FLEET);
    let open = json!({"polygon": [[0, 0], [100, 0], [100, 100], [0, 100]], "swath": 10});
    let (st, v) = call(&s, "POST", "/plan", Some(open)).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "polygon_not_closed");

    let closed =
        json!({"polygon": [[0, 0], [100, 0], [100, 100], [0, 100], [0, 0]], "swath": 10, "k": 3});
    let (st, v) = call(&s, "POST", "/plan", Some(closed)).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["vehicles"].as_array().unwrap().len(), 3);
    assert!(v["coverage_ratio"].as_f64().unwrap() >= 0.99);
    for veh in v["vehicles"].as_array().unwrap() {
        assert!(veh["min_turn_radius"].as_f64().unwrap() >= 5.0 * (1.0 - 1e-6));
        assert!(veh["waypoints"][0]["lat"].is_f64());
    }

    let (st, v) = call(
        &s,
        "POST",
        "/plan",
        Some(json!({"polygon": [], "swath": 10, "bogus": 1})),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "bad_request");

    let (st, v) = call(&s, "GET", "/plan", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&v), "no_survey");
}

#[tokio::test]
async fn preflight_endpoint() {
    let s = state(FLEET);
    s.lock().run_until(2.5).unwrap();
    let (st, v) = call(&s, "POST", "/vehicle/2/preflight", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["passed"], true, "{v}");
    assert_eq!(v["items"].as_array().unwrap().len(), 6);
}

#[tokio::test]
async fn depth_grid_endpoint() {
    let s = state(FLEET);
    let (st, v) = call(&s, "GET", "/grids/depth", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&v), "no_depth_data");

    s.lock().run_until(40.0).unwrap();
    let (st, v) = call(&s, "GET", "/grids/depth?cell=10", None).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["cell_size"], 10.0);
    assert!(v["populated"].as_u64().unwrap() > 0);
    let (st, v) = call(&s, "GET", "/grids/depth?format=text", None).await;
    assert_eq!(st, StatusCode::OK);
    assert!(v.as_str().unwrap().starts_with("asv-envgrid 1\n"));
    let (st, _) = call(&s, "GET", "/grids/depth?format=xml", None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = call(&s, "GET", "/grids/depth?cell=-1", None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn stream_carries_length_prefixed_frames() {
    assert_eq!(stream_chunk(&[0xA5, 1, 2]), vec![3, 0, 0, 0, 0xA5, 1, 2]);

    let s = state(FLEET);
    let req = Request::builder()
        .uri("/stream")
        .body(Body::empty())
        .unwrap();
    let resp = router(s.clone()).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "application/octet-stream");
    s.lock().run_until(1.5).unwrap();
    s.publish();

    let mut body = resp.into_body();
    let mut buf = Vec::new();
    let mut frames = Vec::new();
    while frames.len() < 5 {
        let chunk = body.frame().await.unwrap().unwrap().into_data().unwrap();
        buf.extend_from_slice(&chunk);
        while buf.len() >= 4 {
            let n = u32::from_le_bytes(buf[..4].try_into().unwrap()) as usize;
            if buf.len() < 4 + n {
                break;
            }
            frames.push(decode(&buf[4..4 + n]).expect("valid frame"));
            buf.drain(..4 + n);
        }
    }
    assert!(frames
        .iter()
        .any(|f| matches!(f.msg, Message::Heartbeat(_))));
    assert!(frames.iter().all(|f| f.sys_id == 1 || f.sys_id == 2));
}

#[tokio::test]
async fn plan_from_query() {
    let s = state(FLEET);
    let (st, v) = call(
        &s,
        "GET",
        "/plan?polygon=0,0;100,0;100,100;0,100;0,0&swath=10&k=3&r_min=5",
        None,
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["vehicles"].as_array().unwrap().len(), 3);
    assert_eq!(v["r_min"], 5.0);
    assert!(v["coverage_ratio"].as_f64().unwrap() >= 0.99);

    let (st, v) = call(
        &s,
        "GET",
        "/plan?polygon=0,0;100,0;100,100;0,100&swath=10",
        None,
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "polygon_not_closed");
    let (st, v) = call(&s, "GET", "/plan?polygon=0,0;100,0;100,100;0,100;0,0", None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "bad_request");
    let (st, _) = call(&s, "GET", "/plan?polygon=0,0;x,1&swath=10", None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);

    let survey = state(
        r#"
duration = 60.0
origin = { lat = 34.0, lon = -81.0 }
survey = { polygon = [[0.0, 0.0], [80.0, 0.0], [80.0, 60.0], [0.0, 60.0]], swath = 10.0 }
[[vehicle]]
sys_id = 1
[[vehicle]]
sys_id = 2
start = { east = 80.0, north = 0.0 }
"#,
    );
    let (st, v) = call(&survey, "GET", "/plan", None).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["vehicles"].as_array().unwrap().len(), 2);
    assert_eq!(v["vehicles"][1]["entry"], json!([80.0, 0.0]));
    let (st, v) = call(&survey, "GET", "/plan?k=1", None).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["vehicles"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn velocity_setpoints_track_commanded_speed() {
    let s = state(FLEET);
    s.lock().run_until(2.0).unwrap();
    let (st, _) = call(
        &s,
        "POST",
        "/vehicle/1/mode",
        Some(json!({"mode": "VELOCITY_CONTROL"})),
    )
    .await;
    assert_eq!(st, StatusCode::ACCEPTED);
    s.lock().run_until(3.0).unwrap();
    let (tau_v, start) = {
        let w = s.lock();
        (w.scenario().vehicles[0].params.tau_v, w.now())
    };
    let target = 3.0;
    let mut t = start;
    while t < start + 3.0 * tau_v + 2.0 {
        let (st, v) = call(
            &s,
            "POST",
            "/vehicle/1/velocity",
            Some(json!({"steering": 0.0, "speed": target})),
        )
        .await;
        assert_eq!(st, StatusCode::ACCEPTED, "{v}");
        t += 0.2;
        s.lock().run_until(t).unwrap();
    }
    let w = s.lock();
    let v = w.vehicle(1).unwrap();
    assert_eq!(
        v.last_output().unwrap().mode,
        asv_core::autopilot::Mode::VelocityControl
    );
    let speed = v.state.v_water;
    assert!((speed - target).abs() <= 0.1 * target, "speed {speed}");
}

#[tokio::test]
async fn simultaneous_uploads_to_four_vehicles() {
    let mut toml = String::from("duration = 120.0\norigin = { lat = 34.0, lon = -81.0 }\n");
    for id in 1..=4 {
        toml += &format!(
            "[[vehicle]]\nsys_id = {id}\nstart = {{ east = {}.0, north = 0.0 }}\n",
            20 * id
        );
    }
    let s = state(&toml);
    s.lock().run_until(2.0).unwrap();
    for id in 1..=4u8 {
        let lon = -81.0 + 0.0002 * id as f64;
        let body = json!({
            "mission_id": 40 + id,
            "waypoints": [
                {"lat": 34.0004, "lon": lon, "speed": 3.0},
                {"lat": 34.0008, "lon": lon, "speed": 3.0},
                {"lat": 34.0008, "lon": lon + 0.0001, "speed": 3.0}
            ]
        });
        let (st, v) = call(&s, "POST", &format!("/vehicle/{id}/mission"), Some(body)).await;
        assert_eq!(st, StatusCode::ACCEPTED, "{v}");
    }
    s.lock().run_until(10.0).unwrap();
    for id in 1..=4u8 {
        let (_, v) = call(&s, "GET", &format!("/vehicle/{id}"), None).await;
        assert_eq!(v["upload"]["phase"], "accepted", "{v}");
        assert_eq!(v["mission_id"], 40 + id);
        assert_eq!(v["mode"], "AUTO_WP_OFFBOARD");
    }
}

#[tokio::test]
async fn replayed_stream_matches_live_stream() {
    let dir = tempfile::tempdir().unwrap();
    let sc = Scenario::parse(FLEET).unwrap();
    let env = sc.environment(std::path::Path::new(".")).unwrap();
    let s = AppState::new(World::new(sc, env, Sinks::files(dir.path()).unwrap()).unwrap());
    let mut rx = s.frames.subscribe();
    let mut live = Vec::new();
    for t in 1..=30 {
        s.lock().run_until(t as f64).unwrap();
        s.publish();
        while let Ok(f) = rx.try_recv() {
            live.extend_from_slice(&stream_chunk(&f));
        }
    }
    s.lock().finish().unwrap();
    let (replayed, warning) = replay_stream(&dir.path().join(EVENT_LOG)).unwrap();
    assert_eq!(warning, None);
    assert!(live.len() > 1000);
    assert_eq!(replayed, live);
}
