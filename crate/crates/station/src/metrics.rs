//! Run metrics, computed from event-log records only so that a replay
//! reproduces them exactly.

use std::collections::BTreeMap;

use asv_core::autopilot::Mode;
use asv_core::vehicle::EngineState;
use serde::{Deserialize, Serialize};

use crate::eventlog::{Body, Record, NO_WAYPOINT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleMetrics {
    pub sys_id: u8,
    pub mission_id: Option<u16>,
    pub waypoints_total: u32,
    pub waypoints_hit: u32,
    /// Waypoints passed once without entering the acceptance radius
    /// (counted whether or not they were reached later).
    pub waypoints_missed_first_pass: u32,
    /// Waypoints still outstanding when the run ended.
    pub waypoints_unreached: u32,
    pub mission_complete: bool,
    /// RMS cross-track error over the straight parts of legs, m.
    pub cross_track_rms: Option<f64>,
    pub cross_track_samples: u64,
    pub fuel_used: f64,
    pub distance: f64,
    pub final_engine: Option<EngineState>,
    pub final_mode: Option<Mode>,
    pub upload: Option<String>,
    pub frames_sent: u64,
    pub frames_dropped: u64,
}

impl VehicleMetrics {
    fn new(sys_id: u8) -> Self {
        VehicleMetrics {
            sys_id,
            mission_id: None,
            waypoints_total: 0,
            waypoints_hit: 0,
            waypoints_missed_first_pass: 0,
            waypoints_unreached: 0,
            mission_complete: false,
            cross_track_rms: None,
            cross_track_samples: 0,
            fuel_used: 0.0,
            distance: 0.0,
            final_engine: None,
            final_mode: None,
            upload: None,
            frames_sent: 0,
            frames_dropped: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub duration: f64,
    pub vehicles: Vec<VehicleMetrics>,
    pub frames_quarantined: u64,
    /// Whether an End record was seen.
    pub complete: bool,
}

impl RunMetrics {
    pub fn vehicle(&self, sys_id: u8) -> Option<&VehicleMetrics> {
        self.vehicles.iter().find(|v| v.sys_id == sys_id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// All missions accepted and finished.
    pub fn all_missions_complete(&self) -> bool {
        self.vehicles
            .iter()
            .filter(|v| v.mission_id.is_some() || v.upload.is_some())
            .all(|v| v.mission_complete)
    }
}

#[derive(Debug, Default)]
struct Acc {
    m: Option<VehicleMetrics>,
    xte_sq: f64,
    first_fuel: Option<f64>,
    last_fuel: f64,
    last_pos: Option<(f64, f64)>,
}

/// Folds records into [`RunMetrics`].
#[derive(Debug, Default)]
pub struct MetricsAccumulator {
    vehicles: BTreeMap<u8, Acc>,
    last_t: f64,
    quarantined: u64,
    complete: bool,
}

impl MetricsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    fn acc(&mut self, sys_id: u8) -> &mut Acc {
        let a = self.vehicles.entry(sys_id).or_default();
        a.m.get_or_insert_with(|| VehicleMetrics::new(sys_id));
        a
    }

    pub fn push(&mut self, rec: &Record) {
        self.last_t = self.last_t.max(rec.t);
        match &rec.body {
            Body::Track(p) => {
                let a = self.acc(rec.sys_id);
                if let Some((e, n)) = a.last_pos {
                    a.m.as_mut().unwrap().distance += (p.east - e).hypot(p.north - n);
                }
                a.last_pos = Some((p.east, p.north));
                a.first_fuel.get_or_insert(p.fuel);
                a.last_fuel = p.fuel;
                let m = a.m.as_mut().unwrap();
                if !p.xte.is_nan() {
                    a.xte_sq += p.xte * p.xte;
                    m.cross_track_samples += 1;
                }
                m.waypoints_hit += p.reached as u32;
                m.final_engine = EngineState::from_code(p.engine);
                m.final_mode = Mode::from_code(p.mode);
                m.mission_complete = m.waypoints_total > 0
                    && p.active != NO_WAYPOINT
                    && p.active as u32 >= m.waypoints_total;
            }
            Body::MissionLoaded { mission_id, count } => {
                let a = self.acc(rec.sys_id);
                let m = a.m.as_mut().unwrap();
                m.mission_id = Some(*mission_id);
                m.waypoints_total = *count as u32;
                m.waypoints_hit = 0;
                m.waypoints_missed_first_pass = 0;
                m.mission_complete = false;
            }
            Body::WaypointMiss { .. } => {
                self.acc(rec.sys_id)
                    .m
                    .as_mut()
                    .unwrap()
                    .waypoints_missed_first_pass += 1;
            }
            Body::UploadResult { outcome, .. } => {
                self.acc(rec.sys_id).m.as_mut().unwrap().upload = Some(outcome.name().to_string());
            }
            Body::LinkSummary {
                up_sent,
                up_dropped,
                down_sent,
                down_dropped,
            } => {
                let m = self.acc(rec.sys_id).m.as_mut().unwrap();
                m.frames_sent = up_sent + down_sent;
                m.frames_dropped = up_dropped + down_dropped;
            }
            Body::Quarantined(_) => self.quarantined += 1,
            Body::End => self.complete = true,
            Body::Session(_) | Body::Downlink(_) | Body::Uplink(_) | Body::Command(_) => {}
        }
    }

    pub fn finish(&self) -> RunMetrics {
        let vehicles = self
            .vehicles
            .values()
            .filter_map(|a| {
                let mut m = a.m.clone()?;
                m.cross_track_rms = (m.cross_track_samples > 0)
                    .then(|| (a.xte_sq / m.cross_track_samples as f64).sqrt());
                m.fuel_used = a.first_fuel.map_or(0.0, |f| f - a.last_fuel);
                m.waypoints_unreached = m.waypoints_total.saturating_sub(m.waypoints_hit);
                Some(m)
            })
            .collect();
        RunMetrics {
            duration: self.last_t,
            vehicles,
            frames_quarantined: self.quarantined,
            complete: self.complete,
        }
    }
}

pub fn from_records<'a>(records: impl IntoIterator<Item = &'a Record>) -> RunMetrics {
    let mut acc = MetricsAccumulator::new();
    for r in records {
        acc.push(r);
    }
    acc.finish()
}
