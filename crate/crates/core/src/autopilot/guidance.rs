//! Waypoint missions and pure-pursuit line following.

use core::ops::Range;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geo::{geo_to_local, GeoPoint, Heading, LocalPoint};

use super::pid::PidGains;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Waypoint {
    pub target: GeoPoint,
    /// Requested water speed on the leg into this waypoint, m/s.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mission {
    pub id: u16,
    pub waypoints: Vec<Waypoint>,
    pub home: GeoPoint,
}

impl Mission {
    pub fn new(id: u16, waypoints: Vec<Waypoint>, home: GeoPoint) -> Result<Self> {
        let m = Mission {
            id,
            waypoints,
            home,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::InvalidParameter(
                "mission needs at least one waypoint",
            ));
        }
        if self.waypoints.len() > u16::MAX as usize {
            return Err(Error::InvalidParameter("mission has too many waypoints"));
        }
        self.home.validate()?;
        for wp in &self.waypoints {
            wp.target.validate()?;
            if !(wp.speed.is_finite() && wp.speed >= 0.0) {
                return Err(Error::InvalidParameter(
                    "waypoint speed must be finite and non-negative",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GuidanceConfig {
    /// Pure-pursuit lookahead along the active leg, m.
    pub lookahead: f64,
    /// Proportional speed-loop gain, throttle fraction per m/s of error.
    pub speed_gain: f64,
    /// Vehicle top speed used for throttle feed-forward, m/s.
    pub v_max: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            lookahead: 8.0,
            speed_gain: 0.5,
            v_max: 21.7 / 3.6,
        }
    }
}

impl GuidanceConfig {
    /// Feed-forward plus proportional throttle for a target water speed.
    pub fn speed_throttle(&self, target: f64, v_water: f64) -> f64 {
        let target = target.clamp(0.0, self.v_max);
        (target / self.v_max + self.speed_gain * (target - v_water)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceOutput {
    pub psi_des: Heading,
    pub throttle: f64,
    pub done: bool,
    /// Index of the waypoint being steered for (equals the waypoint count
    /// once done).
    pub active: usize,
    /// Waypoints accepted during this update.
    pub reached: Range<usize>,
}

/// Progress through one mission.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionTracker {
    mission: Mission,
    targets: Vec<LocalPoint>,
    active: usize,
    leg_start: Option<LocalPoint>,
}

impl MissionTracker {
    pub fn new(mission: Mission, origin: GeoPoint) -> Result<Self> {
        let targets = mission
            .waypoints
            .iter()
            .map(|w| geo_to_local(origin, w.target))
            .collect::<Result<Vec<_>>>()?;
        Ok(MissionTracker {
            mission,
            targets,
            active: 0,
            leg_start: None,
        })
    }

    pub fn mission(&self) -> &Mission {
        &self.mission
    }

    pub fn targets(&self) -> &[LocalPoint] {
        &self.targets
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn is_done(&self) -> bool {
        self.active >= self.targets.len()
    }

    /// Starts the active leg at `p` instead of the vehicle position.
    pub fn begin_leg_from(&mut self, p: LocalPoint) {
        self.leg_start = Some(p);
    }

    /// Forgets the current leg origin so the next update starts a fresh leg
    /// from wherever the vehicle is (used when re-entering an auto mode).
    pub fn restart_leg(&mut self) {
        self.leg_start = None;
    }

    /// Active leg as `(start, end)`.
    pub fn leg(&self) -> Option<(LocalPoint, LocalPoint)> {
        let end = *self.targets.get(self.active)?;
        Some((self.leg_start?, end))
    }

    pub fn update(
        &mut self,
        pos: LocalPoint,
        psi: Heading,
        v_water: f64,
        gains: &PidGains,
        cfg: &GuidanceConfig,
    ) -> GuidanceOutput {
        let first = self.active;
        if self.leg_start.is_none() {
            self.leg_start = Some(pos);
        }
        while let Some(&target) = self.targets.get(self.active) {
            if pos.distance(target) > gains.wp_radius {
                break;
            }
            self.leg_start = Some(target);
            self.active += 1;
        }
        let reached = first..self.active;

        let Some(&target) = self.targets.get(self.active) else {
            return GuidanceOutput {
                psi_des: psi,
                throttle: 0.0,
                done: true,
                active: self.active,
                reached,
            };
        };
        let start = self.leg_start.unwrap_or(pos);
        let aim = pursuit_point(start, target, pos, cfg.lookahead);
        let speed = self.mission.waypoints[self.active].speed;
        GuidanceOutput {
            psi_des: pos.bearing_to(aim),
            throttle: cfg.speed_throttle(speed, v_water),
            done: false,
            active: self.active,
            reached,
        }
    }
}

/// Carrot point `lookahead` meters past the projection of `pos` onto the
/// segment `start → end`, clamped to `end`.
pub fn pursuit_point(
    start: LocalPoint,
    end: LocalPoint,
    pos: LocalPoint,
    lookahead: f64,
) -> LocalPoint {
    let leg = end - start;
    let len = leg.norm();
    if len < 1e-9 {
        return end;
    }
    let dir = leg * (1.0 / len);
    let along = (pos - start).dot(dir).clamp(0.0, len);
    let s = (along + lookahead).min(len);
    start + dir * s
}

/// Signed perpendicular distance from `pos` to the line `start → end`,
/// positive to starboard of the direction of travel.
pub fn cross_track(start: LocalPoint, end: LocalPoint, pos: LocalPoint) -> f64 {
    let leg = end - start;
    let len = leg.norm();
    if len < 1e-12 {
        return pos.distance(end);
    }
    // starboard of heading (sin ψ, cos ψ) is (cos ψ, -sin ψ), i.e. -cross
    -leg.cross(pos - start) / len
}
