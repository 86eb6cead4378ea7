//! Ground-station side of the fleet: vehicle registry, link supervision,
//! command dispatch and mission uploads.

use std::collections::BTreeMap;

use asv_core::autopilot::{Mission, Mode};
use asv_core::geo::{GeoPoint, Heading};
use asv_core::link::{
    Frame, Heartbeat, LinkState, Message, MissionSender, Telemetry, UploadFailure, UploadStatus,
};
use asv_core::sensing::{SensorKind, SensorSample};
use serde::Serialize;

use crate::eventlog::{Body, Record, UploadOutcome};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GcsError {
    #[error("no vehicle with sys_id {0}")]
    UnknownVehicle(u8),
    #[error("link to vehicle {0} is lost")]
    LinkLost(u8),
    #[error("vehicle {0} already has an upload in progress")]
    UploadInProgress(u8),
    #[error("invalid mission: {0}")]
    InvalidMission(String),
    #[error("invalid command: {0}")]
    InvalidCommand(String),
}

impl GcsError {
    pub fn code(&self) -> &'static str {
        match self {
            GcsError::UnknownVehicle(_) => "unknown_vehicle",
            GcsError::LinkLost(_) => "link_lost",
            GcsError::UploadInProgress(_) => "upload_in_progress",
            GcsError::InvalidMission(_) => "invalid_mission",
            GcsError::InvalidCommand(_) => "invalid_command",
        }
    }
}

/// Operator commands routed through the ground station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GcsCommand {
    SetMode(Mode),
    Kill,
    /// Steering fraction in [-1, 1] and target water speed, m/s.
    Velocity {
        steering: f64,
        speed: f64,
    },
}

impl GcsCommand {
    pub fn describe(&self) -> String {
        match self {
            GcsCommand::SetMode(m) => format!("set_mode {}", m.name()),
            GcsCommand::Kill => "kill".into(),
            GcsCommand::Velocity { steering, speed } => format!("velocity {steering} {speed}"),
        }
    }

    fn message(&self) -> Message {
        match *self {
            GcsCommand::SetMode(mode) => Message::SetMode { mode },
            GcsCommand::Kill => Message::Kill,
            GcsCommand::Velocity { steering, speed } => Message::VelocitySetpoint {
                steering: steering as f32,
                speed: speed as f32,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UploadPhase {
    InProgress,
    Accepted,
    Timeout,
    Rejected,
}

impl From<UploadStatus> for UploadPhase {
    fn from(s: UploadStatus) -> Self {
        match s {
            UploadStatus::InProgress => UploadPhase::InProgress,
            UploadStatus::Accepted => UploadPhase::Accepted,
            UploadStatus::Failed(UploadFailure::Timeout) => UploadPhase::Timeout,
            UploadStatus::Failed(UploadFailure::Rejected) => UploadPhase::Rejected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UploadView {
    pub mission_id: u16,
    pub waypoints: usize,
    pub phase: UploadPhase,
    /// Mode requested once the vehicle accepts the mission.
    pub activate: Option<Mode>,
    pub activated: bool,
}

#[derive(Debug, Clone)]
struct Upload {
    sender: MissionSender,
    view: UploadView,
}

/// What the ground station knows about one vehicle.
#[derive(Debug, Clone, Default)]
pub struct FleetEntry {
    pub sys_id: u8,
    pub last_heartbeat: Option<f64>,
    pub heartbeat: Option<Heartbeat>,
    pub telemetry: Option<Telemetry>,
    pub mission_id: Option<u16>,
    pub frames: u64,
    upload: Option<Upload>,
}

impl FleetEntry {
    pub fn link_state(&self, now: f64) -> LinkState {
        LinkState::from_heartbeat_age(self.last_heartbeat.map(|t| now - t))
    }

    pub fn upload(&self) -> Option<&UploadView> {
        self.upload.as_ref().map(|u| &u.view)
    }
}

/// JSON view of a fleet entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleView {
    pub sys_id: u8,
    pub link: LinkState,
    pub heartbeat_age: Option<f64>,
    pub mode: Option<Mode>,
    pub engine: Option<asv_core::vehicle::EngineState>,
    pub armed: Option<bool>,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    pub heading_deg: Option<f64>,
    pub v_water: Option<f64>,
    pub vg_east: Option<f64>,
    pub vg_north: Option<f64>,
    pub fuel: Option<f64>,
    pub telemetry_t: Option<f64>,
    pub mission_id: Option<u16>,
    pub upload: Option<UploadView>,
    pub frames: u64,
}

#[derive(Debug, Clone)]
pub struct Gcs {
    entries: BTreeMap<u8, FleetEntry>,
    uploads_seen: BTreeMap<u8, u16>,
    outbox: Vec<(u8, Message)>,
    records: Vec<Record>,
    reports: Vec<(u8, SensorSample)>,
    quarantined: u64,
}

impl Gcs {
    pub fn new(sys_ids: impl IntoIterator<Item = u8>) -> Self {
        Gcs {
            entries: sys_ids
                .into_iter()
                .map(|id| {
                    (
                        id,
                        FleetEntry {
                            sys_id: id,
                            ..FleetEntry::default()
                        },
                    )
                })
                .collect(),
            uploads_seen: BTreeMap::new(),
            outbox: Vec::new(),
            records: Vec::new(),
            reports: Vec::new(),
            quarantined: 0,
        }
    }

    pub fn entry(&self, sys_id: u8) -> Option<&FleetEntry> {
        self.entries.get(&sys_id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &FleetEntry> {
        self.entries.values()
    }

    pub fn link_state(&self, sys_id: u8, now: f64) -> Result<LinkState, GcsError> {
        Ok(self.get(sys_id)?.link_state(now))
    }

    pub fn quarantined(&self) -> u64 {
        self.quarantined
    }

    /// Sensor reports received so far.
    pub fn reports(&self) -> &[(u8, SensorSample)] {
        &self.reports
    }

    fn get(&self, sys_id: u8) -> Result<&FleetEntry, GcsError> {
        self.entries
            .get(&sys_id)
            .ok_or(GcsError::UnknownVehicle(sys_id))
    }

    pub fn view(&self, sys_id: u8, now: f64) -> Result<VehicleView, GcsError> {
        let e = self.get(sys_id)?;
        let t = e.telemetry.as_ref();
        Ok(VehicleView {
            sys_id,
            link: e.link_state(now),
            heartbeat_age: e.last_heartbeat.map(|h| now - h),
            mode: e.heartbeat.map(|h| h.mode),
            engine: e.heartbeat.map(|h| h.engine),
            armed: e.heartbeat.map(|h| h.armed),
            lat: t.map(|t| t.lat),
            lon: t.map(|t| t.lon),
            heading_deg: t.map(|t| (t.psi as f64).to_degrees()),
            v_water: t.map(|t| t.v_water as f64),
            vg_east: t.map(|t| t.vg_east as f64),
            vg_north: t.map(|t| t.vg_north as f64),
            fuel: t.map(|t| t.fuel as f64),
            telemetry_t: t.map(|t| t.t),
            mission_id: e.mission_id,
            upload: e.upload().cloned(),
            frames: e.frames,
        })
    }

    /// Handles a frame from the downlink. Returns false if the sender is not
    /// part of the fleet; such frames are quarantined and change nothing.
    pub fn on_frame(&mut self, frame: &Frame, bytes: &[u8], now: f64) -> bool {
        let Some(e) = self.entries.get_mut(&frame.sys_id) else {
            self.quarantined += 1;
            self.records.push(Record::new(
                now,
                frame.sys_id,
                Body::Quarantined(bytes.to_vec()),
            ));
            return false;
        };
        e.frames += 1;
        match &frame.msg {
            Message::Heartbeat(h) => {
                e.last_heartbeat = Some(now);
                e.heartbeat = Some(*h);
            }
            Message::Telemetry(t) => e.telemetry = Some(*t),
            Message::SensorReport(r) => {
                if let Ok(pos) = GeoPoint::new(r.lat, r.lon) {
                    let psi = Heading::new(r.psi as f64).unwrap_or(Heading::NORTH);
                    let raw: Vec<f64> = r.values.iter().map(|v| *v as f64).collect();
                    let valid_len = if r.kind == SensorKind::Depth { 1 } else { 2 };
                    if raw.len() == valid_len {
                        self.reports.push((
                            frame.sys_id,
                            SensorSample {
                                t: r.t,
                                pos,
                                psi,
                                kind: r.kind,
                                raw,
                                quality: r.quality,
                                v_ground: None,
                            },
                        ));
                    }
                }
            }
            msg @ (Message::MissionAck(_) | Message::MissionRequest(_)) => {
                let sys_id = frame.sys_id;
                if let Some(up) = e.upload.as_mut() {
                    let replies = up.sender.handle(msg, now);
                    self.outbox.extend(replies.into_iter().map(|m| (sys_id, m)));
                    self.settle_upload(sys_id, now);
                }
            }
            _ => {}
        }
        true
    }

    fn settle_upload(&mut self, sys_id: u8, now: f64) {
        let Some(e) = self.entries.get_mut(&sys_id) else {
            return;
        };
        let Some(up) = e.upload.as_mut() else { return };
        let phase = UploadPhase::from(up.sender.status());
        if phase == up.view.phase {
            return;
        }
        up.view.phase = phase;
        let outcome = match phase {
            UploadPhase::InProgress => return,
            UploadPhase::Accepted => UploadOutcome::Accepted,
            UploadPhase::Timeout => UploadOutcome::Timeout,
            UploadPhase::Rejected => UploadOutcome::Rejected,
        };
        let mission_id = up.view.mission_id;
        if phase == UploadPhase::Accepted {
            e.mission_id = Some(mission_id);
            if let Some(mode) = up.view.activate {
                up.view.activated = true;
                self.outbox.push((sys_id, Message::SetMode { mode }));
                self.records.push(Record::new(
                    now,
                    sys_id,
                    Body::Command(GcsCommand::SetMode(mode).describe()),
                ));
            }
        }
        self.records.push(Record::new(
            now,
            sys_id,
            Body::UploadResult {
                mission_id,
                outcome,
            },
        ));
    }

    /// Queues an operator command. Mode changes and velocity setpoints need
    /// a live link; a kill is always sent.
    pub fn command(&mut self, sys_id: u8, cmd: GcsCommand, now: f64) -> Result<(), GcsError> {
        let e = self.get(sys_id)?;
        match cmd {
            GcsCommand::Kill => {}
            GcsCommand::SetMode(Mode::ManualOnboard) => {
                return Err(GcsError::InvalidCommand(
                    "MANUAL_ONBOARD is selected by the hardware switch only".into(),
                ))
            }
            GcsCommand::Velocity { steering, speed }
                if !((-1.0..=1.0).contains(&steering) && speed.is_finite() && speed >= 0.0) =>
            {
                return Err(GcsError::InvalidCommand(
                    "velocity needs steering in [-1, 1] and a non-negative speed".into(),
                ))
            }
            _ if e.link_state(now) == LinkState::Lost => return Err(GcsError::LinkLost(sys_id)),
            _ => {}
        }
        self.outbox.push((sys_id, cmd.message()));
        self.records
            .push(Record::new(now, sys_id, Body::Command(cmd.describe())));
        Ok(())
    }

    /// Starts a mission upload, optionally switching the vehicle to
    /// `activate` once (and only if) it accepts. `check_link` refuses the
    /// upload on a lost link.
    pub fn upload(
        &mut self,
        sys_id: u8,
        mission: Mission,
        activate: Option<Mode>,
        now: f64,
        check_link: bool,
    ) -> Result<(), GcsError> {
        let e = self.get(sys_id)?;
        mission
            .validate()
            .map_err(|e| GcsError::InvalidMission(e.to_string()))?;
        if mission.waypoints.len() > u16::MAX as usize {
            return Err(GcsError::InvalidMission("too many waypoints".into()));
        }
        if e.upload()
            .is_some_and(|u| u.phase == UploadPhase::InProgress)
        {
            return Err(GcsError::UploadInProgress(sys_id));
        }
        if check_link && e.link_state(now) == LinkState::Lost {
            return Err(GcsError::LinkLost(sys_id));
        }
        if activate == Some(Mode::ManualOnboard) {
            return Err(GcsError::InvalidCommand(
                "cannot activate MANUAL_ONBOARD".into(),
            ));
        }
        self.uploads_seen.insert(sys_id, mission.id);
        let view = UploadView {
            mission_id: mission.id,
            waypoints: mission.waypoints.len(),
            phase: UploadPhase::InProgress,
            activate,
            activated: false,
        };
        let mut sender = MissionSender::new(mission);
        let first = sender.start(now);
        self.outbox.extend(first.into_iter().map(|m| (sys_id, m)));
        self.records.push(Record::new(
            now,
            sys_id,
            Body::Command(format!("upload {} {}", view.mission_id, view.waypoints)),
        ));
        let e = self.entries.get_mut(&sys_id).expect("checked above");
        e.upload = Some(Upload { sender, view });
        Ok(())
    }

    /// Next mission id not used by any upload to this vehicle.
    pub fn next_mission_id(&self, sys_id: u8) -> u16 {
        self.uploads_seen
            .get(&sys_id)
            .map_or(1, |id| id.wrapping_add(1))
    }

    /// Timers: upload retransmissions and, when `heartbeat` is set, one
    /// heartbeat to every vehicle.
    pub fn poll(&mut self, now: f64, heartbeat: bool) {
        let ids: Vec<u8> = self.entries.keys().copied().collect();
        for id in ids {
            let e = self.entries.get_mut(&id).expect("own key");
            if let Some(up) = e.upload.as_mut() {
                let msgs = up.sender.poll(now);
                self.outbox.extend(msgs.into_iter().map(|m| (id, m)));
                self.settle_upload(id, now);
            }
            if heartbeat {
                self.outbox.push((
                    id,
                    Message::Heartbeat(Heartbeat {
                        mode: Mode::AutoWpOffboard,
                        engine: asv_core::vehicle::EngineState::Running,
                        armed: true,
                    }),
                ));
            }
        }
    }

    /// Messages to transmit, in queue order.
    pub fn take_outbox(&mut self) -> Vec<(u8, Message)> {
        std::mem::take(&mut self.outbox)
    }

    pub fn take_records(&mut self) -> Vec<Record> {
        std::mem::take(&mut self.records)
    }
}
