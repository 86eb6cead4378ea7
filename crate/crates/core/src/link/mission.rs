//! Reliable mission upload over a lossy link.
//!
//! The sender announces the mission with `MissionCount` and streams every
//! `MissionItem`. The receiver buffers items (even ones that arrive before
//! their count), asks for missing indices with `MissionRequest`, and acks
//! only once every item is held. A partial upload never replaces the
//! onboard mission.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::autopilot::{Mission, Waypoint};
use crate::geo::GeoPoint;

use super::channel::SimChannel;
use super::frame::{decode, encode};
use super::message::{AckStatus, Message, MissionAck, MissionCount, MissionItem, MissionRequest};

/// Silence after which either side retransmits, s.
pub const UPLOAD_TIMEOUT: f64 = 1.0;
/// Retransmissions allowed per item (and per count announcement).
pub const MAX_RETRIES: u8 = 5;
/// Orphan items held while waiting for their count.
const MAX_ORPHANS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum UploadFailure {
    /// No response from the vehicle.
    Timeout,
    /// The vehicle answered with a failed or invalid ack.
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum UploadStatus {
    InProgress,
    Accepted,
    Failed(UploadFailure),
}

/// Shore side of an upload.
#[derive(Debug, Clone)]
pub struct MissionSender {
    mission: Mission,
    status: UploadStatus,
    last_activity: f64,
    count_retries: u8,
}

impl MissionSender {
    pub fn new(mission: Mission) -> Self {
        MissionSender {
            mission,
            status: UploadStatus::InProgress,
            last_activity: 0.0,
            count_retries: 0,
        }
    }

    pub fn mission(&self) -> &Mission {
        &self.mission
    }

    pub fn status(&self) -> UploadStatus {
        self.status
    }

    fn count_msg(&self) -> Message {
        Message::MissionCount(MissionCount {
            mission_id: self.mission.id,
            count: self.mission.waypoints.len() as u16,
            home_lat: self.mission.home.lat,
            home_lon: self.mission.home.lon,
        })
    }

    fn item_msg(&self, index: usize) -> Message {
        let wp = &self.mission.waypoints[index];
        Message::MissionItem(MissionItem {
            mission_id: self.mission.id,
            index: index as u16,
            lat: wp.target.lat,
            lon: wp.target.lon,
            speed: wp.speed,
        })
    }

    /// Count announcement followed by every item.
    pub fn start(&mut self, now: f64) -> Vec<Message> {
        self.last_activity = now;
        let mut out = vec![self.count_msg()];
        out.extend((0..self.mission.waypoints.len()).map(|i| self.item_msg(i)));
        out
    }

    pub fn handle(&mut self, msg: &Message, now: f64) -> Vec<Message> {
        if self.status != UploadStatus::InProgress {
            return vec![];
        }
        match msg {
            Message::MissionRequest(r) if r.mission_id == self.mission.id => {
                // the vehicle enforces the per-item retry budget and acks failure
                self.last_activity = now;
                self.count_retries = 0;
                let i = r.index as usize;
                if i < self.mission.waypoints.len() {
                    vec![self.item_msg(i)]
                } else {
                    vec![]
                }
            }
            Message::MissionAck(a) if a.mission_id == self.mission.id => {
                self.status = match a.status {
                    AckStatus::Accepted => UploadStatus::Accepted,
                    AckStatus::Failed | AckStatus::Invalid => {
                        UploadStatus::Failed(UploadFailure::Rejected)
                    }
                };
                vec![]
            }
            _ => vec![],
        }
    }

    /// Re-announces the mission after a silent timeout, giving up after
    /// the retry budget of consecutive silent periods.
    pub fn poll(&mut self, now: f64) -> Vec<Message> {
        if self.status != UploadStatus::InProgress || now - self.last_activity < UPLOAD_TIMEOUT {
            return vec![];
        }
        self.last_activity = now;
        self.count_retries += 1;
        if self.count_retries > MAX_RETRIES {
            self.status = UploadStatus::Failed(UploadFailure::Timeout);
            return vec![];
        }
        vec![self.count_msg()]
    }
}

#[derive(Debug, Clone)]
struct Pending {
    id: u16,
    home: GeoPoint,
    items: Vec<Option<Waypoint>>,
    retries: Vec<u8>,
    last_rx: f64,
    /// Set once gap filling started; every fill then triggers the next
    /// request immediately.
    filling: bool,
}

impl Pending {
    fn lowest_gap(&self) -> Option<usize> {
        self.items.iter().position(Option::is_none)
    }
}

/// Vehicle side of an upload.
#[derive(Debug, Clone, Default)]
pub struct MissionReceiver {
    pending: Option<Pending>,
    orphans: Vec<MissionItem>,
    last_accepted: Option<u16>,
    completed: Option<Mission>,
}

impl MissionReceiver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn in_progress(&self) -> Option<u16> {
        self.pending.as_ref().map(|p| p.id)
    }

    pub fn last_accepted(&self) -> Option<u16> {
        self.last_accepted
    }

    /// The most recent fully received mission, handed over once.
    pub fn take_completed(&mut self) -> Option<Mission> {
        self.completed.take()
    }

    pub fn handle(&mut self, msg: &Message, now: f64) -> Vec<Message> {
        match msg {
            Message::MissionCount(c) => self.on_count(c, now),
            Message::MissionItem(item) => self.on_item(item, now),
            _ => vec![],
        }
    }

    pub fn poll(&mut self, now: f64) -> Vec<Message> {
        let Some(p) = self.pending.as_mut() else {
            return vec![];
        };
        if now - p.last_rx < UPLOAD_TIMEOUT {
            return vec![];
        }
        p.last_rx = now;
        p.filling = true;
        self.request_gap(true)
    }

    fn ack(id: u16, status: AckStatus) -> Message {
        Message::MissionAck(MissionAck {
            mission_id: id,
            status,
        })
    }

    fn on_count(&mut self, c: &MissionCount, now: f64) -> Vec<Message> {
        if let Some(p) = self.pending.as_mut().filter(|p| p.id == c.mission_id) {
            // the sender heard nothing back; tell it what is still missing
            p.last_rx = now;
            p.filling = true;
            return self.request_gap(false);
        }
        if self.last_accepted == Some(c.mission_id) {
            return vec![Self::ack(c.mission_id, AckStatus::Accepted)];
        }
        let Ok(home) = GeoPoint::new(c.home_lat, c.home_lon) else {
            return vec![Self::ack(c.mission_id, AckStatus::Invalid)];
        };
        if c.count == 0 {
            return vec![Self::ack(c.mission_id, AckStatus::Invalid)];
        }
        let n = c.count as usize;
        self.pending = Some(Pending {
            id: c.mission_id,
            home,
            items: vec![None; n],
            retries: vec![0; n],
            last_rx: now,
            filling: false,
        });
        let orphans: Vec<_> = self
            .orphans
            .drain(..)
            .filter(|o| o.mission_id == c.mission_id)
            .collect();
        if orphans.is_empty() {
            return vec![];
        }
        for o in &orphans {
            let reply = self.on_item(o, now);
            if self.pending.is_none() {
                // completed or rejected by this item
                return reply;
            }
        }
        // items came first, so the count itself was late or resent; ask for
        // whatever is still missing right away
        if let Some(p) = self.pending.as_mut() {
            p.filling = true;
        }
        self.request_gap(false)
    }

    fn on_item(&mut self, item: &MissionItem, now: f64) -> Vec<Message> {
        if self.last_accepted == Some(item.mission_id) {
            return vec![];
        }
        let Some(p) = self.pending.as_mut().filter(|p| p.id == item.mission_id) else {
            if self.orphans.len() >= MAX_ORPHANS {
                self.orphans.remove(0);
            }
            self.orphans.push(*item);
            return vec![];
        };
        let i = item.index as usize;
        if i >= p.items.len() {
            return vec![];
        }
        let target = match GeoPoint::new(item.lat, item.lon) {
            Ok(g) if item.speed.is_finite() && item.speed >= 0.0 => g,
            _ => {
                let id = p.id;
                self.pending = None;
                return vec![Self::ack(id, AckStatus::Invalid)];
            }
        };
        p.last_rx = now;
        p.items[i].get_or_insert(Waypoint {
            target,
            speed: item.speed,
        });
        if p.lowest_gap().is_none() {
            return self.finish();
        }
        if i + 1 == p.items.len() {
            p.filling = true;
        }
        if p.filling {
            self.request_gap(false)
        } else {
            vec![]
        }
    }

    /// Asks for the lowest missing item. Only timeout-driven requests
    /// count against the retry budget.
    fn request_gap(&mut self, retry: bool) -> Vec<Message> {
        let Some(p) = self.pending.as_mut() else {
            return vec![];
        };
        let Some(gap) = p.lowest_gap() else {
            return self.finish();
        };
        if retry {
            p.retries[gap] += 1;
        }
        if p.retries[gap] > MAX_RETRIES {
            let id = p.id;
            self.pending = None;
            return vec![Self::ack(id, AckStatus::Failed)];
        }
        vec![Message::MissionRequest(MissionRequest {
            mission_id: p.id,
            index: gap as u16,
        })]
    }

    fn finish(&mut self) -> Vec<Message> {
        let Some(p) = self.pending.take() else {
            return vec![];
        };
        let waypoints = p.items.into_iter().flatten().collect();
        match Mission::new(p.id, waypoints, p.home) {
            Ok(m) => {
                self.last_accepted = Some(p.id);
                self.completed = Some(m);
                vec![Self::ack(p.id, AckStatus::Accepted)]
            }
            Err(_) => vec![Self::ack(p.id, AckStatus::Invalid)],
        }
    }
}

/// Outcome of [`simulate_upload`].
#[derive(Debug, Clone, PartialEq)]
pub struct UploadReport {
    pub status: UploadStatus,
    /// Frames the shore side put on the air.
    pub frames_up: u64,
    /// Frames the vehicle put on the air.
    pub frames_down: u64,
    pub elapsed: f64,
}

/// Runs a complete upload over a pair of simulated channels, passing every
/// message through the wire codec. The receiver keeps any mission it
/// completes; read it with [`MissionReceiver::take_completed`].
#[allow(clippy::too_many_arguments)]
pub fn simulate_upload<R: Rng>(
    mission: Mission,
    receiver: &mut MissionReceiver,
    up: &mut SimChannel<R>,
    down: &mut SimChannel<R>,
    distance: f64,
    t0: f64,
    dt: f64,
    deadline: f64,
) -> UploadReport {
    let mut sender = MissionSender::new(mission);
    let (mut seq_up, mut seq_down) = (0u8, 0u8);
    let (mut frames_up, mut frames_down) = (0u64, 0u64);
    let send =
        |ch: &mut SimChannel<R>, seq: &mut u8, count: &mut u64, msgs: Vec<Message>, now: f64| {
            for m in msgs {
                let bytes = encode(&m, *seq, 1).expect("protocol messages fit a frame");
                *seq = seq.wrapping_add(1);
                *count += 1;
                ch.send(now, distance, bytes);
            }
        };

    let mut now = t0;
    let first = sender.start(now);
    send(up, &mut seq_up, &mut frames_up, first, now);
    while sender.status() == UploadStatus::InProgress && now - t0 < deadline {
        now += dt;
        while let Some(bytes) = up.receive(now) {
            if let Ok(f) = decode(&bytes) {
                let replies = receiver.handle(&f.msg, now);
                send(down, &mut seq_down, &mut frames_down, replies, now);
            }
        }
        let replies = receiver.poll(now);
        send(down, &mut seq_down, &mut frames_down, replies, now);
        while let Some(bytes) = down.receive(now) {
            if let Ok(f) = decode(&bytes) {
                let more = sender.handle(&f.msg, now);
                send(up, &mut seq_up, &mut frames_up, more, now);
            }
        }
        let more = sender.poll(now);
        send(up, &mut seq_up, &mut frames_up, more, now);
    }
    let status = match sender.status() {
        UploadStatus::InProgress => UploadStatus::Failed(UploadFailure::Timeout),
        s => s,
    };
    UploadReport {
        status,
        frames_up,
        frames_down,
        elapsed: now - t0,
    }
}
