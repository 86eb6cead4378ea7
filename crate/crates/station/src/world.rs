//! The simulated fleet: onboard software, radios and the ground station
//! stepped together on one clock.
//!
//! Every tick each vehicle (in `sys_id` order) drains its uplink, runs the
//! autopilot, integrates its dynamics, samples its sensors and queues
//! downlink traffic. The ground station then drains every downlink,
//! updates its registry and transmits whatever it has queued. All
//! randomness comes from per-vehicle generators derived from the scenario
//! seed, so a run is a pure function of scenario and seed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use asv_core::autopilot::{
    Autopilot, Command, Joystick, Mission, Mode, RcFrame, SafetyInputs, TickInputs, TickOutput,
};
use asv_core::env::EnvironmentField;
use asv_core::geo::{local_to_geo, GeoPoint, Heading, LocalPoint};
use asv_core::link::{
    decode, encode, Frame, Heartbeat, LinkStats, Message, MissionReceiver, SensorReport,
    SimChannel, Telemetry,
};
use asv_core::sensing::{self, SensorKind, SensorSample};
use asv_core::vehicle::{apply_kill, EngineState, Vehicle, VehicleState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datafiles::{self, TrackRow, TRACK_HEADER};
use crate::eventlog::{Body, EventWriter, Record, TrackPoint, NO_WAYPOINT};
use crate::gcs::{Gcs, GcsCommand, GcsError, VehicleView};
use crate::metrics::{MetricsAccumulator, RunMetrics};
use crate::scenario::{Delivery, RcSpec, Scenario, ScenarioError, SensorToggles};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("vehicle {sys_id}: {source}")]
    Vehicle { sys_id: u8, source: asv_core::Error },
    #[error("output: {0}")]
    Io(#[from] io::Error),
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one (vehicle, purpose) pair.
pub fn derive_rng(seed: u64, sys_id: u8, stream: u64) -> SimRng {
    SimRng::seed_from_u64(splitmix(splitmix(seed) ^ ((sys_id as u64) << 8 | stream)))
}

/// Depth grid from logged samples: outliers are flagged per vehicle, in
/// time order, before gridding.
pub fn build_depth_grid(
    samples: &[(u8, SensorSample)],
    cell: f64,
) -> asv_core::Result<sensing::DepthGrid> {
    let mut by_vehicle: BTreeMap<u8, Vec<SensorSample>> = BTreeMap::new();
    for (id, s) in samples.iter().filter(|(_, s)| s.kind == SensorKind::Depth) {
        by_vehicle.entry(*id).or_default().push(s.clone());
    }
    let filtered: Vec<SensorSample> = by_vehicle
        .values()
        .flat_map(|v| sensing::filter_outliers(v))
        .collect();
    sensing::grid_depth(&filtered, cell)
}

pub fn engine_name(e: EngineState) -> &'static str {
    match e {
        EngineState::Running => "running",
        EngineState::Killed => "killed",
        EngineState::FuelExhausted => "fuel_exhausted",
    }
}

/// Output files of a run. Missing sinks are skipped.
pub struct Sinks {
    events: Option<EventWriter<Box<dyn Write + Send>>>,
    samples: Option<Box<dyn Write + Send>>,
    track: Option<Box<dyn Write + Send>>,
    error: Option<io::Error>,
}

pub const EVENT_LOG: &str = "session.evlog";
pub const SAMPLE_LOG: &str = "samples.jsonl";
pub const TRACK_LOG: &str = "track.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const DEPTH_GRID_FILE: &str = "depth_grid.txt";

impl Sinks {
    pub fn none() -> Self {
        Sinks {
            events: None,
            samples: None,
            track: None,
            error: None,
        }
    }

    pub fn new(
        events: Option<Box<dyn Write + Send>>,
        samples: Option<Box<dyn Write + Send>>,
        mut track: Option<Box<dyn Write + Send>>,
    ) -> io::Result<Self> {
        if let Some(t) = track.as_mut() {
            writeln!(t, "{TRACK_HEADER}")?;
        }
        Ok(Sinks {
            events: events.map(EventWriter::new).transpose()?,
            samples,
            track,
            error: None,
        })
    }

    /// The standard file set in `dir`.
    pub fn files(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> io::Result<Option<Box<dyn Write + Send>>> {
            Ok(Some(Box::new(BufWriter::new(File::create(
                dir.join(name),
            )?))))
        };
        Sinks::new(open(EVENT_LOG)?, open(SAMPLE_LOG)?, open(TRACK_LOG)?)
    }

    fn keep(&mut self, r: io::Result<()>) {
        if let Err(e) = r {
            self.error.get_or_insert(e);
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        if let Some(e) = self.events.as_mut() {
            e.flush()?;
        }
        if let Some(s) = self.samples.as_mut() {
            s.flush()?;
        }
        if let Some(t) = self.track.as_mut() {
            t.flush()?;
        }
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct MissTracker {
    closest: Vec<f64>,
    counted: Vec<bool>,
}

impl MissTracker {
    fn reset(&mut self, n: usize) {
        self.closest = vec![f64::INFINITY; n];
        self.counted = vec![false; n];
    }

    /// A waypoint is missed on its first pass when the distance starts
    /// growing again while the closest approach is outside the radius.
    fn observe(&mut self, active: usize, d: f64, radius: f64) -> bool {
        let (Some(c), Some(counted)) = (self.closest.get_mut(active), self.counted.get_mut(active))
        else {
            return false;
        };
        let missed = d > *c + 0.5 && *c > radius && !*counted;
        if missed {
            *counted = true;
        }
        *c = c.min(d);
        missed
    }
}

/// Scripted transmitter state for one vehicle.
#[derive(Debug, Clone)]
pub struct Radio {
    pub spec: RcSpec,
    pub ch5_us: u16,
    /// Kill switch held low by the operator.
    pub kill_held: bool,
}

impl Radio {
    fn frame(&self, now: f64) -> Option<RcFrame> {
        let age = match self.spec.lost_at {
            Some(t) if now >= t => now - t,
            _ => 0.0,
        };
        Some(RcFrame {
            ch1_us: self.spec.ch1_us,
            ch3_us: self.spec.ch3_us,
            ch5_us: self.ch5_us,
            ch6_us: if self.kill_held {
                1000
            } else {
                self.spec.ch6_us
            },
            age,
        })
    }
}

/// Everything aboard one vehicle.
#[derive(Debug, Clone)]
pub struct Onboard {
    pub sys_id: u8,
    pub wire_id: u8,
    pub vehicle: Vehicle,
    pub state: VehicleState,
    pub autopilot: Autopilot,
    pub safety: SafetyInputs,
    pub power_lost_at: Option<f64>,
    pub radio: Option<Radio>,
    pub joystick: Joystick,
    pub sensors: SensorToggles,
    pub receiver: MissionReceiver,
    pub rng: SimRng,
    commands: Vec<Command>,
    seq: u8,
    misses: MissTracker,
    last: Option<TickOutput>,
}

/// What one onboard tick produced.
#[derive(Debug, Default)]
pub struct TickReport {
    pub records: Vec<Record>,
    pub downlink: Vec<Message>,
    pub samples: Vec<SensorSample>,
    pub track: Option<TrackRow>,
}

impl Onboard {
    pub fn last_output(&self) -> Option<&TickOutput> {
        self.last.as_ref()
    }

    pub fn next_seq(&mut self) -> u8 {
        let s = self.seq;
        self.seq = self.seq.wrapping_add(1);
        s
    }

    pub fn queue(&mut self, cmd: Command) {
        self.commands.push(cmd);
    }

    fn note_mission(&mut self, m: &Mission, now: f64, out: &mut Vec<Record>) {
        self.misses.reset(m.waypoints.len());
        out.push(Record::new(
            now,
            self.sys_id,
            Body::MissionLoaded {
                mission_id: m.id,
                count: m.waypoints.len().min(u16::MAX as usize) as u16,
            },
        ));
    }

    /// Applies one decoded uplink frame; returns replies for the downlink.
    pub fn on_uplink(
        &mut self,
        frame: &Frame,
        now: f64,
        records: &mut Vec<Record>,
    ) -> Vec<Message> {
        if frame.sys_id != self.sys_id {
            return vec![];
        }
        match &frame.msg {
            Message::Heartbeat(_) => self.commands.push(Command::GcsHeartbeat),
            Message::SetMode { mode } => self.commands.push(Command::SetMode(*mode)),
            Message::Kill => self.commands.push(Command::Kill),
            Message::VelocitySetpoint { steering, speed } => {
                self.commands.push(Command::VelocitySetpoint {
                    steering: *steering as f64,
                    speed: *speed as f64,
                })
            }
            msg @ (Message::MissionCount(_) | Message::MissionItem(_)) => {
                let replies = self.receiver.handle(msg, now);
                if let Some(m) = self.receiver.take_completed() {
                    self.note_mission(&m, now, records);
                    self.commands.push(Command::LoadMission(m));
                }
                return replies;
            }
            _ => {}
        }
        vec![]
    }

    fn rc_frame(&self, now: f64) -> Option<RcFrame> {
        self.radio.as_ref().and_then(|r| r.frame(now))
    }

    /// One control tick at time `now` (tick index `k`).
    pub fn tick(
        &mut self,
        k: u64,
        now: f64,
        ctx: &TickContext<'_>,
    ) -> Result<TickReport, WorldError> {
        let err = |source| WorldError::Vehicle {
            sys_id: self.sys_id,
            source,
        };
        let mut rep = TickReport::default();
        if self.power_lost_at.is_some_and(|t| now >= t) {
            self.safety.autopilot_powered = false;
        }
        let commands = std::mem::take(&mut self.commands);
        let (prev_mode, prev_engine) = (self.last.as_ref().map(|o| o.mode), self.state.engine);
        self.state.t = now;
        let out = self.autopilot.tick(&TickInputs {
            rc: self.rc_frame(now),
            safety: self.safety,
            joystick: self.joystick,
            commands: &commands,
            nav: &self.state,
        });
        if out.engine.is_killed() {
            self.state = apply_kill(&self.state);
        }
        let mut next = self
            .vehicle
            .step(&self.state, out.steering, out.throttle, ctx.env, ctx.dt)
            .map_err(err)?;
        next.t = (k + 1) as f64 * ctx.dt;
        self.state = next;
        let t = next.t;

        let gains = self.autopilot.config().gains;
        let guidance = self.autopilot.config().guidance;
        let mut xte = f64::NAN;
        let mut active = NO_WAYPOINT;
        if let Some(tr) = self.autopilot.tracker() {
            active = tr.active().min(NO_WAYPOINT as usize - 1) as u16;
            if out.mode.is_waypoint() && !tr.is_done() {
                let i = tr.active();
                let d = next.pos.distance(tr.targets()[i]);
                if self.misses.observe(i, d, gains.wp_radius) {
                    rep.records.push(Record::new(
                        t,
                        self.sys_id,
                        Body::WaypointMiss { index: i as u16 },
                    ));
                }
                if let Some((s, e)) = tr.leg() {
                    let (dx, dy) = (e.east - s.east, e.north - s.north);
                    let len = dx.hypot(dy);
                    if len > 0.0 {
                        let along =
                            ((next.pos.east - s.east) * dx + (next.pos.north - s.north) * dy) / len;
                        if along >= 2.0 * guidance.lookahead && along <= len - gains.wp_radius {
                            xte = asv_core::autopilot::cross_track(s, e, next.pos);
                        }
                    }
                }
            }
        }
        let geo = local_to_geo(ctx.origin, next.pos).map_err(err)?;
        rep.records.push(Record::new(
            t,
            self.sys_id,
            Body::Track(TrackPoint {
                east: next.pos.east,
                north: next.pos.north,
                psi: next.psi.radians(),
                v_water: next.v_water,
                fuel: next.fuel,
                engine: next.engine.code(),
                mode: out.mode.code(),
                active,
                xte,
                reached: out.reached.len().min(u16::MAX as usize) as u16,
            }),
        ));
        rep.track = Some(TrackRow {
            t,
            sys_id: self.sys_id,
            geo,
            east: next.pos.east,
            north: next.pos.north,
            psi: next.psi.radians(),
            v_water: next.v_water,
            vg_east: next.v_ground.x,
            vg_north: next.v_ground.y,
            fuel: next.fuel,
            engine: engine_name(next.engine),
            mode: out.mode.name(),
            active_wp: (active != NO_WAYPOINT).then_some(active as usize),
            xte: (!xte.is_nan()).then_some(xte),
        });

        let s = ctx.sensors;
        if self.sensors.depth && ctx.every.depth.is_some_and(|n| k.is_multiple_of(n)) {
            let sample = sensing::sample_depth(
                ctx.env,
                &next,
                ctx.origin,
                &mut self.rng,
                s.noise.depth_sd,
                &s.aeration,
            )
            .map_err(err)?;
            rep.samples.push(sample);
        }
        if ctx.every.vector.is_some_and(|n| k.is_multiple_of(n)) {
            for (on, kind) in [
                (self.sensors.wind, SensorKind::Wind),
                (self.sensors.current, SensorKind::Current),
            ] {
                if on {
                    let sample = sensing::sample_vector(
                        ctx.env,
                        &next,
                        ctx.origin,
                        kind,
                        &mut self.rng,
                        s.noise.vector_sd,
                    )
                    .map_err(err)?;
                    rep.samples.push(sample);
                }
            }
        }
        if s.report_to_gcs {
            rep.downlink.extend(rep.samples.iter().map(|x| {
                Message::SensorReport(SensorReport {
                    kind: x.kind,
                    quality: x.quality,
                    t: x.t,
                    lat: x.pos.lat,
                    lon: x.pos.lon,
                    psi: x.psi.radians() as f32,
                    values: x.raw.iter().map(|v| *v as f32).collect(),
                })
            }));
        }
        // status changes are announced at once rather than on the next beat
        if k.is_multiple_of(ctx.every.heartbeat) || prev_mode != Some(out.mode) || prev_engine != next.engine
        {
            rep.downlink.push(Message::Heartbeat(Heartbeat {
                mode: out.mode,
                engine: next.engine,
                armed: next.engine == EngineState::Running,
            }));
        }
        if k.is_multiple_of(ctx.every.telemetry) {
            rep.downlink.push(Message::Telemetry(Telemetry {
                lat: geo.lat,
                lon: geo.lon,
                psi: next.psi.radians() as f32,
                v_water: next.v_water as f32,
                vg_east: next.v_ground.x as f32,
                vg_north: next.v_ground.y as f32,
                fuel: next.fuel as f32,
                t,
            }));
        }
        self.last = Some(out);
        Ok(rep)
    }
}

/// Tick periods of the periodic onboard and shore tasks.
#[derive(Debug, Clone, Copy)]
pub struct Every {
    pub heartbeat: u64,
    pub telemetry: u64,
    pub gcs_heartbeat: u64,
    pub depth: Option<u64>,
    pub vector: Option<u64>,
}

impl Every {
    fn from_scenario(s: &Scenario) -> Self {
        let ticks = |period: f64| ((period / s.dt).round() as u64).max(1);
        let rate = |hz: f64| (hz > 0.0).then(|| ticks(1.0 / hz));
        Every {
            heartbeat: ticks(asv_core::link::HEARTBEAT_PERIOD),
            telemetry: ticks(s.gcs.telemetry_period),
            gcs_heartbeat: ticks(s.gcs.heartbeat_period),
            depth: rate(s.sensors.depth_rate_hz),
            vector: rate(s.sensors.vector_rate_hz),
        }
    }
}

pub struct TickContext<'a> {
    pub env: &'a EnvironmentField,
    pub origin: GeoPoint,
    pub dt: f64,
    pub sensors: &'a crate::scenario::SensorSpec,
    pub every: Every,
}

/// Both directions of one vehicle's telemetry radio.
#[derive(Debug, Clone)]
pub struct RadioPair {
    pub up: SimChannel<SimRng>,
    pub down: SimChannel<SimRng>,
}

pub struct World {
    scenario: Scenario,
    env: EnvironmentField,
    every: Every,
    k: u64,
    pub(crate) vehicles: Vec<Onboard>,
    pub(crate) links: Vec<RadioPair>,
    pub(crate) gcs: Gcs,
    gcs_seq: u8,
    sinks: Sinks,
    metrics: MetricsAccumulator,
    stream: Option<Vec<Vec<u8>>>,
    samples: Vec<(u8, SensorSample)>,
    finished: bool,
}

impl World {
    pub fn new(
        scenario: Scenario,
        env: EnvironmentField,
        sinks: Sinks,
    ) -> Result<World, WorldError> {
        scenario.validate()?;
        let missions = scenario.missions()?;
        let mut order: Vec<usize> = (0..scenario.vehicles.len()).collect();
        order.sort_by_key(|&i| scenario.vehicles[i].sys_id);
        let link_seed = splitmix(scenario.seed) ^ scenario.link.seed;

        let mut vehicles = Vec::new();
        let mut links = Vec::new();
        for &i in &order {
            let spec = &scenario.vehicles[i];
            let err = |source| WorldError::Vehicle {
                sys_id: spec.sys_id,
                source,
            };
            let mut cfg = scenario.autopilot;
            if let Some(g) = spec.gains {
                cfg.gains = g;
            }
            let vehicle = Vehicle::new(spec.params, cfg.steering, cfg.throttle).map_err(err)?;
            let psi = Heading::from_degrees(spec.heading_deg).map_err(err)?;
            let mut state = VehicleState::at_rest(&spec.params, spec.start, psi);
            if let Some(f) = spec.fuel {
                state.fuel = f;
            }
            if !spec.engine_running {
                state.engine = EngineState::Killed;
            }
            let radio = spec.rc.clone().map(|rc| Radio {
                ch5_us: rc
                    .ch5_us
                    .or_else(|| cfg.modes.pulse_for(spec.mode))
                    .unwrap_or(1500),
                spec: rc,
                kill_held: false,
            });
            vehicles.push(Onboard {
                sys_id: spec.sys_id,
                wire_id: spec.wire_id.unwrap_or(spec.sys_id),
                vehicle,
                state,
                autopilot: Autopilot::new(cfg, scenario.origin, spec.mode),
                safety: spec.safety.inputs(),
                power_lost_at: spec.safety.power_lost_at,
                radio,
                joystick: Joystick::default(),
                sensors: spec.sensors,
                receiver: MissionReceiver::new(),
                rng: derive_rng(scenario.seed, spec.sys_id, 1),
                commands: Vec::new(),
                seq: 0,
                misses: MissTracker::default(),
                last: None,
            });
            links.push(RadioPair {
                up: SimChannel::new(scenario.link, derive_rng(link_seed, spec.sys_id, 2)),
                down: SimChannel::new(scenario.link, derive_rng(link_seed, spec.sys_id, 3)),
            });
        }

        let mut world = World {
            every: Every::from_scenario(&scenario),
            gcs: Gcs::new(vehicles.iter().map(|v| v.sys_id)),
            env,
            k: 0,
            vehicles,
            links,
            gcs_seq: 0,
            sinks,
            metrics: MetricsAccumulator::new(),
            stream: None,
            samples: Vec::new(),
            finished: false,
            scenario,
        };
        world.emit(Record::new(0.0, 0, Body::Session(world.scenario.to_toml())));
        for (n, &i) in order.iter().enumerate() {
            let Some(am) = missions[i].clone() else {
                continue;
            };
            match am.delivery {
                Delivery::Preloaded => {
                    let v = &mut world.vehicles[n];
                    let mut recs = Vec::new();
                    v.note_mission(&am.mission, 0.0, &mut recs);
                    v.autopilot
                        .load_mission(am.mission)
                        .map_err(|source| WorldError::Vehicle {
                            sys_id: v.sys_id,
                            source,
                        })?;
                    recs.into_iter().for_each(|r| world.emit(r));
                }
                Delivery::Upload => {
                    let id = world.vehicles[n].sys_id;
                    world
                        .gcs
                        .upload(id, am.mission, Some(Mode::AutoWpOffboard), 0.0, false)
                        .map_err(|e| ScenarioError::Invalid {
                            field: format!("vehicle[{i}].mission"),
                            message: e.to_string(),
                        })?;
                }
            }
        }
        world.drain_gcs_records();
        Ok(world)
    }

    /// Loads a scenario file and builds its world.
    pub fn from_file(path: &Path, sinks: Sinks) -> Result<World, WorldError> {
        let (scenario, base) = Scenario::load(path)?;
        let env = scenario.environment(&base)?;
        World::new(scenario, env, sinks)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn env(&self) -> &EnvironmentField {
        &self.env
    }

    pub fn now(&self) -> f64 {
        self.k as f64 * self.scenario.dt
    }

    pub fn every(&self) -> Every {
        self.every
    }

    pub fn ticks(&self) -> u64 {
        self.k
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn sys_ids(&self) -> Vec<u8> {
        self.vehicles.iter().map(|v| v.sys_id).collect()
    }

    pub fn vehicle(&self, sys_id: u8) -> Option<&Onboard> {
        self.vehicles.iter().find(|v| v.sys_id == sys_id)
    }

    pub fn vehicle_mut(&mut self, sys_id: u8) -> Option<&mut Onboard> {
        self.vehicles.iter_mut().find(|v| v.sys_id == sys_id)
    }

    pub fn link(&self, sys_id: u8) -> Option<&RadioPair> {
        let i = self.index(sys_id)?;
        self.links.get(i)
    }

    pub fn link_mut(&mut self, sys_id: u8) -> Option<&mut RadioPair> {
        let i = self.index(sys_id)?;
        self.links.get_mut(i)
    }

    fn index(&self, sys_id: u8) -> Option<usize> {
        self.vehicles.iter().position(|v| v.sys_id == sys_id)
    }

    pub fn gcs(&self) -> &Gcs {
        &self.gcs
    }

    pub fn view(&self, sys_id: u8) -> Result<VehicleView, GcsError> {
        self.gcs.view(sys_id, self.now())
    }

    pub fn fleet(&self) -> Vec<VehicleView> {
        self.vehicles
            .iter()
            .filter_map(|v| self.gcs.view(v.sys_id, self.now()).ok())
            .collect()
    }

    /// Sensor samples logged aboard so far.
    pub fn samples(&self) -> &[(u8, SensorSample)] {
        &self.samples
    }

    /// Keeps a copy of every downlink frame for [`World::take_stream`].
    pub fn enable_stream(&mut self) {
        self.stream.get_or_insert_with(Vec::new);
    }

    pub fn take_stream(&mut self) -> Vec<Vec<u8>> {
        self.stream.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn metrics(&self) -> RunMetrics {
        self.metrics.finish()
    }

    fn emit(&mut self, rec: Record) {
        self.metrics.push(&rec);
        if let Some(w) = self.sinks.events.as_mut() {
            let r = w.append(&rec);
            self.sinks.keep(r);
        }
    }

    fn drain_gcs_records(&mut self) {
        for r in self.gcs.take_records() {
            self.emit(r);
        }
    }

    /// Sends an operator command over the telemetry link. A kill is also
    /// mirrored on the kill switch of the vehicle's simulated radio, if any.
    pub fn command(&mut self, sys_id: u8, cmd: GcsCommand) -> Result<(), GcsError> {
        let r = self.gcs.command(sys_id, cmd, self.now());
        if r.is_ok() && cmd == GcsCommand::Kill {
            if let Some(radio) = self.vehicle_mut(sys_id).and_then(|v| v.radio.as_mut()) {
                radio.kill_held = true;
            }
        }
        self.drain_gcs_records();
        r
    }

    /// Uploads a mission and switches to `activate` once accepted.
    pub fn upload(
        &mut self,
        sys_id: u8,
        mission: Mission,
        activate: Option<Mode>,
    ) -> Result<(), GcsError> {
        let r = self.gcs.upload(sys_id, mission, activate, self.now(), true);
        self.drain_gcs_records();
        r
    }

    /// Advances one control tick.
    pub fn step(&mut self) -> Result<(), WorldError> {
        let dt = self.scenario.dt;
        let now = self.now();
        let k = self.k;
        let gcs_pos: LocalPoint = self.scenario.gcs.position;
        let mut records = Vec::new();
        let mut tracks = Vec::new();
        let mut new_samples = Vec::new();
        {
            let ctx = TickContext {
                env: &self.env,
                origin: self.scenario.origin,
                dt,
                sensors: &self.scenario.sensors,
                every: self.every,
            };
            for (v, link) in self.vehicles.iter_mut().zip(self.links.iter_mut()) {
                let mut replies = Vec::new();
                while let Some(bytes) = link.up.receive(now) {
                    if let Ok(frame) = decode(&bytes) {
                        replies.extend(v.on_uplink(&frame, now, &mut records));
                    }
                }
                replies.extend(v.receiver.poll(now));
                let rep = v.tick(k, now, &ctx)?;
                records.extend(rep.records);
                tracks.extend(rep.track);
                new_samples.extend(rep.samples.into_iter().map(|s| (v.sys_id, s)));
                let dist = v.state.pos.distance(gcs_pos);
                for msg in replies.into_iter().chain(rep.downlink) {
                    let seq = v.next_seq();
                    if let Ok(bytes) = encode(&msg, seq, v.wire_id) {
                        link.down.send(now, dist, bytes);
                    }
                }
            }
        }
        for r in records {
            self.emit(r);
        }
        for row in &tracks {
            if let Some(t) = self.sinks.track.as_mut() {
                let r = datafiles::write_track_row(t, row);
                self.sinks.keep(r);
            }
        }
        for (id, s) in &new_samples {
            if let Some(out) = self.sinks.samples.as_mut() {
                let r = datafiles::write_sample(out, *id, s);
                self.sinks.keep(r);
            }
        }
        self.samples.extend(new_samples);

        for i in 0..self.links.len() {
            let src = self.vehicles[i].sys_id;
            while let Some(bytes) = self.links[i].down.receive(now) {
                if let Some(s) = self.stream.as_mut() {
                    s.push(bytes.clone());
                }
                if let Ok(frame) = decode(&bytes) {
                    self.gcs.on_frame(&frame, &bytes, now);
                }
                self.emit(Record::new(now, src, Body::Downlink(bytes)));
            }
        }
        self.gcs.poll(now, k.is_multiple_of(self.every.gcs_heartbeat));
        self.drain_gcs_records();
        for (id, msg) in self.gcs.take_outbox() {
            let Some(i) = self.index(id) else { continue };
            let seq = self.gcs_seq;
            self.gcs_seq = self.gcs_seq.wrapping_add(1);
            let Ok(bytes) = encode(&msg, seq, id) else {
                continue;
            };
            let dist = self.vehicles[i].state.pos.distance(gcs_pos);
            self.emit(Record::new(now, id, Body::Uplink(bytes.clone())));
            self.links[i].up.send(now, dist, bytes);
        }
        self.k += 1;
        Ok(())
    }

    /// Steps until simulated time reaches `t` (or the scenario ends).
    pub fn run_until(&mut self, t: f64) -> Result<(), WorldError> {
        let end = t.min(self.scenario.duration);
        while !self.finished && self.now() + 0.5 * self.scenario.dt < end {
            self.step()?;
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<(), WorldError> {
        self.run_until(self.scenario.duration)
    }

    pub fn link_stats(&self, sys_id: u8) -> Option<(LinkStats, LinkStats)> {
        self.link(sys_id).map(|l| (l.up.stats(), l.down.stats()))
    }

    /// Writes closing records, flushes every sink and returns the metrics.
    pub fn finish(&mut self) -> Result<RunMetrics, WorldError> {
        if !self.finished {
            let now = self.now();
            for i in 0..self.vehicles.len() {
                let (up, down) = (self.links[i].up.stats(), self.links[i].down.stats());
                let id = self.vehicles[i].sys_id;
                self.emit(Record::new(
                    now,
                    id,
                    Body::LinkSummary {
                        up_sent: up.sent,
                        up_dropped: up.dropped,
                        down_sent: down.sent,
                        down_dropped: down.dropped,
                    },
                ));
            }
            self.emit(Record::new(now, 0, Body::End));
            self.finished = true;
        }
        self.sinks.flush()?;
        Ok(self.metrics.finish())
    }
}
