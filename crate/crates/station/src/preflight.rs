//! Staged pre-mission checklist, executed against a bench copy of one
//! vehicle: the vehicle is held stationary and nothing done here reaches
//! the running simulation.

use asv_core::autopilot::{Command, Mode, TickInputs, TickOutput};
use asv_core::link::{decode, encode, LinkState, Message};
use asv_core::sensing::SensorKind;
use asv_core::vehicle::{apply_kill, pwm_to_normalized, start_engine, EngineState};
use serde::Serialize;

use crate::gcs::GcsError;
use crate::world::{Onboard, RadioPair, TickContext, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    EngineOff,
    EngineOn,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChecklistItem {
    pub name: &'static str,
    pub stage: Stage,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChecklistReport {
    pub sys_id: u8,
    pub passed: bool,
    pub items: Vec<ChecklistItem>,
}

impl ChecklistReport {
    pub fn item(&self, name: &str) -> Option<&ChecklistItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

pub const ITEMS: [(&str, Stage); 6] = [
    ("steering_sweep", Stage::EngineOff),
    ("throttle_sweep", Stage::EngineOff),
    ("mode_cycle", Stage::EngineOff),
    ("link_heartbeat", Stage::EngineOff),
    ("kill_switch", Stage::EngineOn),
    ("sensor_streams", Stage::EngineOn),
];

/// Seconds the bench listens for heartbeats and sensor data.
pub const LISTEN: f64 = 2.0;

struct Bench<'w> {
    v: Onboard,
    link: RadioPair,
    ctx: TickContext<'w>,
    distance: f64,
    k: u64,
}

impl Bench<'_> {
    fn now(&self) -> f64 {
        self.k as f64 * self.ctx.dt
    }

    /// One autopilot tick without moving the boat.
    fn control(&mut self, commands: &[Command]) -> TickOutput {
        let now = self.now();
        self.k += 1;
        let mut nav = self.v.state;
        nav.t = now;
        nav.v_water = 0.0;
        let rc = self.v.radio.as_ref().map(|r| asv_core::autopilot::RcFrame {
            ch1_us: r.spec.ch1_us,
            ch3_us: r.spec.ch3_us,
            ch5_us: r.ch5_us,
            ch6_us: if r.kill_held { 1000 } else { r.spec.ch6_us },
            age: 0.0,
        });
        let out = self.v.autopilot.tick(&TickInputs {
            rc,
            safety: self.v.safety,
            joystick: self.v.joystick,
            commands,
            nav: &nav,
        });
        if out.engine.is_killed() {
            self.v.state = apply_kill(&self.v.state);
        }
        out
    }

    /// Full onboard ticks for `secs`, position held. Returns downlink
    /// frames received ashore and the sensor kinds sampled.
    fn listen(
        &mut self,
        secs: f64,
    ) -> Result<(Vec<asv_core::link::Frame>, Vec<SensorKind>), String> {
        let held = self.v.state;
        let mut frames = Vec::new();
        let mut kinds = Vec::new();
        let end = self.k + (secs / self.ctx.dt).round() as u64;
        while self.k < end {
            let now = self.now();
            self.v.queue(Command::GcsHeartbeat);
            let rep = self
                .v
                .tick(self.k, now, &self.ctx)
                .map_err(|e| e.to_string())?;
            let mut s = self.v.state;
            s.pos = held.pos;
            s.psi = held.psi;
            s.v_water = 0.0;
            s.v_ground = asv_core::geo::Vector2::ZERO;
            self.v.state = s;
            kinds.extend(rep.samples.iter().map(|x| x.kind));
            for msg in rep.downlink {
                let seq = self.v.next_seq();
                if let Ok(bytes) = encode(&msg, seq, self.v.wire_id) {
                    self.link.down.send(now, self.distance, bytes);
                }
            }
            while let Some(bytes) = self.link.down.receive(now) {
                if let Ok(f) = decode(&bytes) {
                    frames.push(f);
                }
            }
            self.k += 1;
        }
        Ok((frames, kinds))
    }
}

fn item(
    name: &'static str,
    stage: Stage,
    passed: bool,
    detail: impl Into<String>,
) -> ChecklistItem {
    ChecklistItem {
        name,
        stage,
        passed,
        detail: detail.into(),
    }
}

fn steering_sweep(b: &mut Bench<'_>) -> ChecklistItem {
    let cal = b.v.autopilot.config().steering;
    let mut bad = Vec::new();
    for f in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let out = b.control(&[
            Command::GcsHeartbeat,
            Command::SetMode(Mode::VelocityControl),
            Command::VelocitySetpoint {
                steering: f,
                speed: 0.0,
            },
        ]);
        let want = cal.pwm_for(f);
        if out.mode != Mode::VelocityControl || out.steering != want {
            bad.push(format!(
                "{f:+}: {} us in {} (want {} us)",
                out.steering.us(),
                out.mode.name(),
                want.us()
            ));
        }
    }
    if bad.is_empty() {
        item(
            "steering_sweep",
            Stage::EngineOff,
            true,
            format!("{}..{} us", cal.min_us, cal.max_us),
        )
    } else {
        item("steering_sweep", Stage::EngineOff, false, bad.join("; "))
    }
}

fn throttle_sweep(b: &mut Bench<'_>) -> ChecklistItem {
    let cfg = *b.v.autopilot.config();
    let v_max = cfg.guidance.v_max;
    let mut pulses = Vec::new();
    let mut bad = Vec::new();
    for speed in [0.0, 0.1 * v_max, 0.5 * v_max, v_max] {
        let out = b.control(&[
            Command::GcsHeartbeat,
            Command::VelocitySetpoint {
                steering: 0.0,
                speed,
            },
        ]);
        let want = cfg
            .throttle
            .pwm_for(cfg.guidance.speed_throttle(speed, 0.0));
        if out.throttle != want {
            bad.push(format!(
                "{speed:.2} m/s: {} us (want {} us)",
                out.throttle.us(),
                want.us()
            ));
        }
        pulses.push(pwm_to_normalized(out.throttle, &cfg.throttle));
    }
    let monotone = pulses.windows(2).all(|w| w[1] >= w[0]) && pulses[pulses.len() - 1] > pulses[0];
    if !monotone {
        bad.push(format!("throttle not increasing with speed: {pulses:?}"));
    }
    if bad.is_empty() {
        item(
            "throttle_sweep",
            Stage::EngineOff,
            true,
            "monotone over 0..v_max",
        )
    } else {
        item("throttle_sweep", Stage::EngineOff, false, bad.join("; "))
    }
}

fn mode_cycle(b: &mut Bench<'_>) -> ChecklistItem {
    let table = b.v.autopilot.config().modes;
    let mut bad = Vec::new();
    let detail;
    if let Some(start) = b.v.radio.as_ref().map(|r| table.band_index(r.ch5_us)) {
        // begin on a different band so a pending ground-station request yields
        for j in (1..=6).map(|n| (start + n) % 6) {
            let band = table.bands[j];
            b.v.radio.as_mut().expect("radio present").ch5_us = (band.lo_us + band.hi_us) / 2;
            let out = b.control(&[Command::GcsHeartbeat]);
            if out.mode != band.mode {
                bad.push(format!(
                    "band {j}: {} (want {})",
                    out.mode.name(),
                    band.mode.name()
                ));
            }
        }
        let was = b.v.safety.hw_manual_switch;
        b.v.safety.hw_manual_switch = true;
        let out = b.control(&[]);
        if out.mode != Mode::ManualOnboard {
            bad.push(format!("hardware switch: {}", out.mode.name()));
        }
        b.v.safety.hw_manual_switch = was;
        b.control(&[]);
        detail = "six switch positions and the hardware switch";
    } else {
        for mode in [
            Mode::AutoWpOffboard,
            Mode::AutoWpOnboard,
            Mode::VelocityControl,
        ] {
            let out = b.control(&[Command::GcsHeartbeat, Command::SetMode(mode)]);
            if out.mode != mode {
                bad.push(format!("{}: got {}", mode.name(), out.mode.name()));
            }
        }
        detail = "no transmitter: ground-station modes only";
    }
    if bad.is_empty() {
        item("mode_cycle", Stage::EngineOff, true, detail)
    } else {
        item("mode_cycle", Stage::EngineOff, false, bad.join("; "))
    }
}

fn link_heartbeat(b: &mut Bench<'_>) -> ChecklistItem {
    let frames = match b.listen(LISTEN) {
        Ok((f, _)) => f,
        Err(e) => return item("link_heartbeat", Stage::EngineOff, false, e),
    };
    let beats: Vec<_> = frames
        .iter()
        .filter(|f| matches!(f.msg, Message::Heartbeat(_)))
        .collect();
    let foreign = beats.iter().filter(|f| f.sys_id != b.v.sys_id).count();
    if foreign > 0 {
        item(
            "link_heartbeat",
            Stage::EngineOff,
            false,
            format!(
                "heartbeats carry sys_id {} instead of {}",
                b.v.wire_id, b.v.sys_id
            ),
        )
    } else if beats.is_empty() {
        item(
            "link_heartbeat",
            Stage::EngineOff,
            false,
            format!("no heartbeat within {LISTEN} s"),
        )
    } else {
        item(
            "link_heartbeat",
            Stage::EngineOff,
            true,
            format!("{} heartbeats in {LISTEN} s", beats.len()),
        )
    }
}

fn kill_switch(b: &mut Bench<'_>) -> ChecklistItem {
    let name = "kill_switch";
    b.v.state = start_engine(&b.v.state);
    if b.v.state.engine != EngineState::Running {
        return item(
            name,
            Stage::EngineOn,
            false,
            "engine cannot be started (fuel exhausted)",
        );
    }
    let via_radio = b.v.radio.is_some();
    let out = if via_radio {
        b.v.radio.as_mut().expect("radio present").kill_held = true;
        b.control(&[])
    } else {
        b.control(&[Command::Kill])
    };
    if !out.engine.is_killed() || b.v.state.engine != EngineState::Killed {
        let why = if b.v.safety.kill_override {
            "kill override engaged: engine kept running"
        } else {
            "engine kept running"
        };
        return item(name, Stage::EngineOn, false, why);
    }
    if via_radio {
        b.v.radio.as_mut().expect("radio present").kill_held = false;
    } else {
        b.v.autopilot.rearm();
    }
    let out = b.control(&[]);
    if out.engine.is_killed() {
        return item(
            name,
            Stage::EngineOn,
            false,
            format!("kill did not clear ({:?})", out.kill_reason),
        );
    }
    b.v.state = start_engine(&b.v.state);
    let path = if via_radio {
        "transmitter switch"
    } else {
        "ground-station kill"
    };
    item(
        name,
        Stage::EngineOn,
        true,
        format!("asserted and cleared via {path}"),
    )
}

fn sensor_streams(b: &mut Bench<'_>) -> ChecklistItem {
    let kinds = match b.listen(LISTEN) {
        Ok((_, k)) => k,
        Err(e) => return item("sensor_streams", Stage::EngineOn, false, e),
    };
    let missing: Vec<&str> = SensorKind::ALL
        .iter()
        .filter(|k| !kinds.contains(k))
        .map(|k| k.name())
        .collect();
    if missing.is_empty() {
        item(
            "sensor_streams",
            Stage::EngineOn,
            true,
            format!("{} samples in {LISTEN} s", kinds.len()),
        )
    } else {
        item(
            "sensor_streams",
            Stage::EngineOn,
            false,
            format!("no {} samples within {LISTEN} s", missing.join(", ")),
        )
    }
}

/// Runs the checklist for one vehicle. A vehicle whose link is lost fails
/// every item without being touched.
pub fn run(world: &World, sys_id: u8) -> Result<ChecklistReport, GcsError> {
    let now = world.now();
    let link = world.gcs().link_state(sys_id, now)?;
    let v = world
        .vehicle(sys_id)
        .ok_or(GcsError::UnknownVehicle(sys_id))?;
    if link == LinkState::Lost {
        let items = ITEMS
            .iter()
            .map(|&(name, stage)| item(name, stage, false, "link lost: vehicle unreachable"))
            .collect();
        return Ok(ChecklistReport {
            sys_id,
            passed: false,
            items,
        });
    }
    let s = world.scenario();
    let mut bench = Bench {
        v: v.clone(),
        link: world.link(sys_id).expect("vehicle has a link").clone(),
        ctx: TickContext {
            env: world.env(),
            origin: s.origin,
            dt: s.dt,
            sensors: &s.sensors,
            every: world.every(),
        },
        distance: v.state.pos.distance(s.gcs.position),
        k: world.ticks(),
    };
    bench.v.state.engine = match bench.v.state.engine {
        EngineState::Running => EngineState::Killed,
        e => e,
    };

    let mut items = vec![
        steering_sweep(&mut bench),
        throttle_sweep(&mut bench),
        mode_cycle(&mut bench),
        link_heartbeat(&mut bench),
    ];
    if items.iter().all(|i| i.passed) {
        items.push(kill_switch(&mut bench));
        items.push(sensor_streams(&mut bench));
    } else {
        items.extend(
            ITEMS[4..]
                .iter()
                .map(|&(name, stage)| item(name, stage, false, "not run: engine-off stage failed")),
        );
    }
    Ok(ChecklistReport {
        sys_id,
        passed: items.iter().all(|i| i.passed),
        items,
    })
}
