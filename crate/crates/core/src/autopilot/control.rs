use core::ops::Range;

use crate::geo::GeoPoint;
use crate::vehicle::{pwm_to_normalized, PwmSignal, ServoCalibration, VehicleState};

use super::guidance::{GuidanceConfig, Mission, MissionTracker};
use super::mode::{Mode, ModeTable};
use super::pid::{pid_heading, PidGains, PidState};
use super::safety::{evaluate_kill, resolve_mode, KillDecision, RcFrame, SafetyInputs};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AutopilotConfig {
    pub gains: PidGains,
    pub guidance: GuidanceConfig,
    pub modes: ModeTable,
    /// Radio frames older than this are stale, s.
    pub rc_timeout: f64,
    /// Control period, s.
    pub tick: f64,
    /// Velocity setpoints older than this are ignored, s.
    pub setpoint_timeout: f64,
    /// Ground-station silence after which the offboard mode holds, s.
    pub gcs_timeout: f64,
    pub steering: ServoCalibration,
    pub throttle: ServoCalibration,
}

impl Default for AutopilotConfig {
    fn default() -> Self {
        AutopilotConfig {
            gains: PidGains::default(),
            guidance: GuidanceConfig::default(),
            modes: ModeTable::default(),
            rc_timeout: 2.0,
            tick: 0.05,
            setpoint_timeout: 1.0,
            gcs_timeout: 3.0,
            steering: ServoCalibration::default(),
            throttle: ServoCalibration::default(),
        }
    }
}

/// Commands arriving from the ground station (already decoded and, for
/// missions, fully acknowledged).
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    SetMode(Mode),
    Kill,
    VelocitySetpoint { steering: f64, speed: f64 },
    LoadMission(Mission),
    GcsHeartbeat,
}

/// Factory joystick outputs on the manual side of the manual/auto switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Joystick {
    pub steering: PwmSignal,
    pub throttle: PwmSignal,
}

impl Default for Joystick {
    fn default() -> Self {
        Joystick {
            steering: PwmSignal(1500),
            throttle: PwmSignal(1500),
        }
    }
}

pub struct TickInputs<'a> {
    pub rc: Option<RcFrame>,
    pub safety: SafetyInputs,
    pub joystick: Joystick,
    pub commands: &'a [Command],
    /// Navigation snapshot from the sensor bus.
    pub nav: &'a VehicleState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KillReason {
    /// Relay path: channel 6 low, autopilot unpowered, or kill line low.
    Circuit,
    /// Kill message from the ground station.
    Remote,
    /// Radio lost while driving by radio.
    RcLost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub steering: PwmSignal,
    pub throttle: PwmSignal,
    pub engine: KillDecision,
    pub kill_reason: Option<KillReason>,
    pub mode: Mode,
    /// Waypoints accepted this tick.
    pub reached: Range<usize>,
    /// Active waypoint index, if a mission is loaded.
    pub active_waypoint: Option<usize>,
    pub mission_done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GcsModeRequest {
    mode: Mode,
    /// Channel-5 band at the time of the request; moving the switch to a
    /// different band hands control back to the radio.
    band: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Setpoint {
    steering: f64,
    speed: f64,
    t: f64,
}

/// Onboard controller for one vehicle, stepped once per control tick.
#[derive(Debug, Clone)]
pub struct Autopilot {
    cfg: AutopilotConfig,
    origin: GeoPoint,
    mode: Mode,
    gcs_mode: Option<GcsModeRequest>,
    tracker: Option<MissionTracker>,
    pid: PidState,
    setpoint: Option<Setpoint>,
    remote_kill: bool,
    ch6_was_low: bool,
    last_gcs_contact: Option<f64>,
}

impl Autopilot {
    pub fn new(cfg: AutopilotConfig, origin: GeoPoint, initial_mode: Mode) -> Self {
        Autopilot {
            cfg,
            origin,
            mode: initial_mode,
            gcs_mode: None,
            tracker: None,
            pid: PidState::default(),
            setpoint: None,
            remote_kill: false,
            ch6_was_low: false,
            last_gcs_contact: None,
        }
    }

    pub fn config(&self) -> &AutopilotConfig {
        &self.cfg
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn mission(&self) -> Option<&Mission> {
        self.tracker.as_ref().map(MissionTracker::mission)
    }

    pub fn tracker(&self) -> Option<&MissionTracker> {
        self.tracker.as_ref()
    }

    pub fn remote_kill_latched(&self) -> bool {
        self.remote_kill
    }

    /// Clears a latched remote kill (bench re-arm).
    pub fn rearm(&mut self) {
        self.remote_kill = false;
    }

    /// Replaces the active mission immediately.
    pub fn load_mission(&mut self, mission: Mission) -> crate::Result<()> {
        self.tracker = Some(MissionTracker::new(mission, self.origin)?);
        self.pid.reset();
        Ok(())
    }

    fn apply_command(&mut self, cmd: &Command, rc: Option<&RcFrame>, now: f64) {
        self.last_gcs_contact = Some(now);
        match cmd {
            Command::SetMode(Mode::ManualOnboard) => {
                // only the physical switch can select the factory controls
            }
            Command::SetMode(mode) => {
                let band = rc
                    .filter(|f| !f.is_stale(self.cfg.rc_timeout))
                    .map(|f| self.cfg.modes.band_index(f.ch5_us));
                self.gcs_mode = Some(GcsModeRequest { mode: *mode, band });
            }
            Command::Kill => self.remote_kill = true,
            Command::VelocitySetpoint { steering, speed } => {
                if steering.is_finite() && speed.is_finite() {
                    self.setpoint = Some(Setpoint {
                        steering: steering.clamp(-1.0, 1.0),
                        speed: *speed,
                        t: now,
                    });
                }
            }
            Command::LoadMission(m) => {
                // a mission that does not project into the local frame is dropped
                let _ = self.load_mission(m.clone());
            }
            Command::GcsHeartbeat => {}
        }
    }

    fn select_mode(&mut self, safety: &SafetyInputs, rc: Option<&RcFrame>) -> Mode {
        let radio = resolve_mode(safety, rc, &self.cfg.modes, self.cfg.rc_timeout, self.mode);
        if safety.hw_manual_switch {
            self.gcs_mode = None;
            return radio;
        }
        let fresh = rc.filter(|f| !f.is_stale(self.cfg.rc_timeout));
        if let Some(req) = self.gcs_mode.as_mut() {
            match (fresh, req.band) {
                (Some(f), Some(band)) if self.cfg.modes.band_index(f.ch5_us) != band => {
                    self.gcs_mode = None;
                    return radio;
                }
                (Some(f), None) => req.band = Some(self.cfg.modes.band_index(f.ch5_us)),
                _ => {}
            }
            return req.mode;
        }
        radio
    }

    /// One control tick: drains commands, resolves the mode, computes servo
    /// outputs for that mode and the engine command.
    pub fn tick(&mut self, inputs: &TickInputs<'_>) -> TickOutput {
        let now = inputs.nav.t;
        let rc = inputs.rc.as_ref();
        for cmd in inputs.commands {
            self.apply_command(cmd, rc, now);
        }

        let mode = self.select_mode(&inputs.safety, rc);
        if mode != self.mode {
            if mode.is_waypoint() {
                if let Some(t) = self.tracker.as_mut() {
                    t.restart_leg();
                }
            }
            self.pid.reset();
            self.mode = mode;
        }

        let rc_fresh = rc.filter(|f| !f.is_stale(self.cfg.rc_timeout));
        if let Some(f) = rc_fresh {
            let low = f.kill_commanded();
            if self.ch6_was_low && !low {
                self.remote_kill = false;
            }
            self.ch6_was_low = low;
        }

        let trim = (self.cfg.steering.trim(), self.cfg.throttle.trim());
        let mut reached = 0..0;
        let (steering, throttle) = if mode == Mode::ManualOnboard {
            (
                self.cfg.steering.clamp(inputs.joystick.steering),
                self.cfg.throttle.clamp(inputs.joystick.throttle),
            )
        } else if !inputs.safety.autopilot_powered {
            trim
        } else {
            match mode {
                Mode::ManualRc => match rc {
                    Some(f) => (
                        self.cfg.steering.clamp(PwmSignal(f.ch1_us)),
                        self.cfg.throttle.clamp(PwmSignal(f.ch3_us)),
                    ),
                    None => trim,
                },
                Mode::AutoWpOffboard if !self.gcs_in_contact(now) => trim,
                Mode::AutoWpOffboard | Mode::AutoWpOnboard => {
                    let (out, r) = self.waypoint_outputs(inputs.nav);
                    reached = r;
                    out.unwrap_or(trim)
                }
                Mode::VelocityControl => self.velocity_outputs(inputs.nav).unwrap_or(trim),
                Mode::ManualOnboard => unreachable!(),
            }
        };

        let kill_reason = if inputs.safety.kill_override {
            None
        } else if evaluate_kill(&inputs.safety, rc).is_killed() {
            Some(KillReason::Circuit)
        } else if self.remote_kill {
            Some(KillReason::Remote)
        } else if mode == Mode::ManualRc && rc_fresh.is_none() {
            Some(KillReason::RcLost)
        } else {
            None
        };

        TickOutput {
            steering,
            throttle,
            engine: if kill_reason.is_some() {
                KillDecision::EngineKilled
            } else {
                KillDecision::EngineAllowed
            },
            kill_reason,
            mode,
            reached,
            active_waypoint: self.tracker.as_ref().map(MissionTracker::active),
            mission_done: self.tracker.as_ref().is_some_and(MissionTracker::is_done),
        }
    }

    fn gcs_in_contact(&self, now: f64) -> bool {
        self.last_gcs_contact
            .is_some_and(|t| now - t <= self.cfg.gcs_timeout)
    }

    fn waypoint_outputs(
        &mut self,
        nav: &VehicleState,
    ) -> (Option<(PwmSignal, PwmSignal)>, Range<usize>) {
        let Some(tracker) = self.tracker.as_mut() else {
            return (None, 0..0);
        };
        let g = tracker.update(
            nav.pos,
            nav.psi,
            nav.v_water,
            &self.cfg.gains,
            &self.cfg.guidance,
        );
        if g.done {
            return (None, g.reached);
        }
        let steer = pid_heading(
            &self.cfg.gains,
            g.psi_des,
            nav.psi,
            self.cfg.tick,
            &mut self.pid,
        );
        (
            Some((
                self.cfg.steering.pwm_for(steer),
                self.cfg.throttle.pwm_for(g.throttle),
            )),
            g.reached,
        )
    }

    fn velocity_outputs(&mut self, nav: &VehicleState) -> Option<(PwmSignal, PwmSignal)> {
        let sp = self
            .setpoint
            .filter(|sp| nav.t - sp.t <= self.cfg.setpoint_timeout)?;
        let thr = self.cfg.guidance.speed_throttle(sp.speed, nav.v_water);
        Some((
            self.cfg.steering.pwm_for(sp.steering),
            self.cfg.throttle.pwm_for(thr),
        ))
    }

    /// Commanded steering fraction implied by a steering pulse.
    pub fn steering_fraction(&self, sig: PwmSignal) -> f64 {
        pwm_to_normalized(sig, &self.cfg.steering)
    }
}
