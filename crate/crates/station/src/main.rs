use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asv_core::autopilot::{auto_tune, TuningRig};
use asv_core::geo::GeoPoint;
use asv_core::vehicle::Vehicle;
use asv_station::config::Config;
use asv_station::metrics::RunMetrics;
use asv_station::planning::{plan_request, MissionBody, PlanRequest};
use asv_station::preflight;
use asv_station::runner::{self, Overrides};
use asv_station::server::{self, AppState};
use asv_station::world::{Sinks, World};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

/// Simulator and ground station for small autonomous survey boats.
#[derive(Parser)]
#[command(name = "asv-sim", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Simulated seconds to run, overriding the scenario.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario and write logs and metrics.
    Run {
        #[command(flatten)]
        s: ScenarioArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Exit with status 2 unless every mission completed.
        #[arg(long)]
        strict: bool,
        /// Cell size of the exported depth grid, m.
        #[arg(long)]
        grid_cell: Option<f64>,
        /// Run in real time behind the HTTP service instead of as fast as possible.
        #[arg(long)]
        serve: bool,
        #[arg(long, env = "ASV_TIME_SCALE")]
        time_scale: Option<f64>,
        #[arg(long, env = "ASV_GCS_PORT")]
        port: Option<u16>,
        /// Service configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Start the ground-station service from a configuration file.
    Serve {
        /// Service configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario to simulate, overriding the configuration.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        /// Simulated seconds per wall-clock second; 0 runs flat out.
        #[arg(long)]
        time_scale: Option<f64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Recompute metrics from an event log.
    Replay {
        /// Event log written by `run`.
        log: PathBuf,
        /// Metrics file to compare against; exits with status 2 on mismatch.
        #[arg(long)]
        expect: Option<PathBuf>,
        /// Also write the recorded telemetry stream, framed as on `/stream`.
        #[arg(long)]
        stream: Option<PathBuf>,
    },
    /// Tune the heading controller of one vehicle in calm water.
    Tune {
        #[command(flatten)]
        s: ScenarioArgs,
        #[arg(long)]
        sys_id: Option<u8>,
    },
    /// Plan a coverage survey and write one mission file per vehicle.
    Plan {
        /// Plan request (JSON).
        #[arg(long, conflicts_with = "scenario")]
        request: Option<PathBuf>,
        /// Use the survey section of a scenario instead.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Local frame origin as `lat,lon` (request mode).
        #[arg(long, value_parser = parse_geo)]
        origin: Option<GeoPoint>,
        #[arg(long, default_value = "plan")]
        out_dir: PathBuf,
    },
    /// Run the pre-mission checklist for every vehicle of a scenario.
    Preflight {
        #[command(flatten)]
        s: ScenarioArgs,
        #[arg(long)]
        sys_id: Option<u8>,
    },
}

fn parse_geo(s: &str) -> Result<GeoPoint, String> {
    let (a, b) = s.split_once(',').ok_or("expected lat,lon")?;
    let lat = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let lon = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    GeoPoint::new(lat, lon).map_err(|e| e.to_string())
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn overrides(s: &ScenarioArgs) -> Overrides {
    Overrides {
        duration: s.duration,
        seed: s.seed,
        ..Overrides::default()
    }
}

fn print_summary(m: &RunMetrics) {
    for v in &m.vehicles {
        let xte = v
            .cross_track_rms
            .map_or("-".to_string(), |x| format!("{x:.2} m"));
        println!(
            "vehicle {}: mission {:?} {}/{} waypoints{}, xte rms {}, fuel {:.3} L, {:.0} m",
            v.sys_id,
            v.mission_id,
            v.waypoints_hit.min(v.waypoints_total),
            v.waypoints_total,
            if v.mission_complete {
                " (complete)"
            } else {
                ""
            },
            xte,
            v.fuel_used,
            v.distance
        );
    }
    if m.frames_quarantined > 0 {
        println!("quarantined frames: {}", m.frames_quarantined);
    }
}

fn cmd_run(
    s: &ScenarioArgs,
    out_dir: &Path,
    strict: bool,
    grid_cell: Option<f64>,
) -> Res<ExitCode> {
    let mut o = overrides(s);
    o.grid_cell = grid_cell;
    let (scenario, env) = runner::load(&s.scenario, &o)?;
    let out = runner::run(scenario, env, Some(out_dir))?;
    print_summary(&out.metrics);
    println!("wrote {}", out_dir.display());
    if strict && !out.metrics.all_missions_complete() {
        eprintln!("strict: not every mission completed");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(
    world: World,
    addr: SocketAddr,
    time_scale: f64,
    out_dir: PathBuf,
    grid_cell: Option<f64>,
) -> Res<ExitCode> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let state = AppState::new(world);
        let listener = tokio::net::TcpListener::bind(addr).await?;
        println!("listening on http://{}", listener.local_addr()?);
        let app = server::router(state.clone());
        tokio::spawn(async move {
            if let Err(e) = axum::serve(listener, app).await {
                eprintln!("server: {e}");
            }
        });
        tokio::select! {
            r = server::simulate(state.clone(), time_scale) => {
                r?;
                println!("scenario finished; serving until interrupted");
                tokio::signal::ctrl_c().await?;
            }
            _ = tokio::signal::ctrl_c() => {}
        }
        let mut w = state.lock();
        let m = w.finish()?;
        runner::write_products(&w, &m, &out_dir, grid_cell)?;
        print_summary(&m);
        Ok(ExitCode::SUCCESS)
    })
}

fn service_config(config: Option<&Path>) -> Res<Config> {
    let mut cfg = match config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.apply_env(|k| std::env::var(k).ok())?;
    Ok(cfg)
}

fn start_service(
    scenario: &Path,
    o: &Overrides,
    cfg: &Config,
    port: Option<u16>,
    time_scale: Option<f64>,
    out_dir: PathBuf,
) -> Res<ExitCode> {
    let (sc, env) = runner::load(scenario, o)?;
    let ts = time_scale
        .or(cfg.server.time_scale)
        .unwrap_or(sc.time_scale);
    if !(ts.is_finite() && ts >= 0.0) {
        return Err("time scale must be non-negative".into());
    }
    let grid_cell = sc.output.depth_grid_cell;
    let world = World::new(sc, env, Sinks::files(&out_dir)?)?;
    let addr: SocketAddr =
        format!("{}:{}", cfg.server.bind, port.unwrap_or(cfg.server.port)).parse()?;
    serve(world, addr, ts, out_dir, grid_cell)
}

fn cmd_replay(log: &Path, expect: Option<&Path>, stream: Option<&Path>) -> Res<ExitCode> {
    let (m, warning) = runner::replay(log)?;
    if let Some(w) = warning {
        eprintln!("warning: {w}");
    }
    if let Some(p) = stream {
        std::fs::write(p, runner::replay_stream(log)?.0)?;
    }
    println!("{}", m.to_json());
    if let Some(p) = expect {
        let want: RunMetrics = serde_json::from_str(&std::fs::read_to_string(p)?)?;
        if want != m {
            eprintln!("metrics differ from {}", p.display());
            return Ok(ExitCode::from(2));
        }
        eprintln!("metrics match {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_tune(s: &ScenarioArgs, sys_id: Option<u8>) -> Res<ExitCode> {
    let (sc, _) = runner::load(&s.scenario, &overrides(s))?;
    let mut reports = Vec::new();
    let mut all = true;
    let mut vehicles: Vec<_> = sc
        .vehicles
        .iter()
        .filter(|v| sys_id.is_none_or(|id| v.sys_id == id))
        .collect();
    vehicles.sort_by_key(|v| v.sys_id);
    if vehicles.is_empty() {
        return Err("no matching vehicle".into());
    }
    for v in vehicles {
        let vehicle = Vehicle::new(v.params, sc.autopilot.steering, sc.autopilot.throttle)?;
        let mut rig = TuningRig::calm(vehicle);
        rig.dt = sc.dt;
        let initial = v.gains.unwrap_or(sc.autopilot.gains);
        let (r, ok) = match auto_tune(&rig, initial) {
            Ok(r) => (r, true),
            Err(r) => (r, false),
        };
        all &= ok;
        reports.push(json!({
            "sys_id": v.sys_id,
            "converged": ok,
            "iterations": r.iterations,
            "gains": r.gains,
            "metrics": {
                "rise_time": r.metrics.rise_time,
                "rise_limit": r.metrics.rise_limit,
                "oscillations": r.metrics.oscillations,
                "chatter_rate": r.metrics.chatter_rate,
                "bias": r.metrics.bias,
                "missed_waypoints": r.metrics.missed_waypoints,
            },
        }));
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    Ok(if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_plan(
    request: Option<&Path>,
    scenario: Option<&Path>,
    origin: Option<GeoPoint>,
    out_dir: &Path,
) -> Res<ExitCode> {
    let (req, origin) = match (request, scenario) {
        (Some(r), _) => {
            let req: PlanRequest = serde_json::from_str(&std::fs::read_to_string(r)?)?;
            (req, origin.ok_or("--origin is required with --request")?)
        }
        (None, Some(s)) => {
            let (sc, _) = asv_station::scenario::Scenario::load(s)?;
            let req = PlanRequest::from_scenario(&sc).ok_or("scenario has no survey section")?;
            (req, origin.unwrap_or(sc.origin))
        }
        (None, None) => return Err("give --request or --scenario".into()),
    };
    let plan = plan_request(&req, origin)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("plan.json"),
        serde_json::to_string_pretty(&plan)? + "\n",
    )?;
    for v in &plan.vehicles {
        let body = MissionBody::from_plan(v, req.speed, origin);
        let path = out_dir.join(format!("mission_{}.json", v.index));
        std::fs::write(&path, serde_json::to_string_pretty(&body)? + "\n")?;
        println!(
            "{}: {} waypoints, {} transects, {:.0} m",
            path.display(),
            v.waypoints.len(),
            v.transects,
            v.length
        );
    }
    println!("coverage {:.4}", plan.coverage_ratio);
    if let Some(w) = &plan.warning {
        println!("warning: {w}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_preflight(s: &ScenarioArgs, sys_id: Option<u8>) -> Res<ExitCode> {
    let (sc, env) = runner::load(&s.scenario, &overrides(s))?;
    let mut world = World::new(sc, env, Sinks::none())?;
    // let the station hear from the fleet first
    world.run_until(preflight::LISTEN)?;
    let mut reports = Vec::new();
    for id in world.sys_ids() {
        if sys_id.is_none_or(|s| s == id) {
            reports.push(preflight::run(&world, id)?);
        }
    }
    if reports.is_empty() {
        return Err("no matching vehicle".into());
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    Ok(if reports.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Run {
            s,
            out_dir,
            strict,
            grid_cell,
            serve,
            time_scale,
            port,
            config,
        } => {
            if *serve {
                service_config(config.as_deref()).and_then(|cfg| {
                    let mut o = overrides(s);
                    o.grid_cell = *grid_cell;
                    start_service(&s.scenario, &o, &cfg, *port, *time_scale, out_dir.clone())
                })
            } else {
                cmd_run(s, out_dir, *strict, *grid_cell)
            }
        }
        Cmd::Serve {
            config,
            scenario,
            port,
            time_scale,
            out_dir,
        } => service_config(config.as_deref()).and_then(|cfg| {
            let path = scenario
                .clone()
                .or_else(|| cfg.server.scenario.clone())
                .ok_or("no scenario: give --scenario or set server.scenario")?;
            start_service(
                &path,
                &Overrides::default(),
                &cfg,
                *port,
                *time_scale,
                out_dir.clone(),
            )
        }),
        Cmd::Replay {
            log,
            expect,
            stream,
        } => cmd_replay(log, expect.as_deref(), stream.as_deref()),
        Cmd::Tune { s, sys_id } => cmd_tune(s, *sys_id),
        Cmd::Plan {
            request,
            scenario,
            origin,
            out_dir,
        } => cmd_plan(request.as_deref(), scenario.as_deref(), *origin, out_dir),
        Cmd::Preflight { s, sys_id } => cmd_preflight(s, *sys_id),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
