//! Automated version of the field procedure for refining steering gains:
//! scripted heading-step and line-following runs in calm water, with
//! responsiveness, oscillation, chatter, bias and corner criteria.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::EnvironmentField;
use crate::geo::{local_to_geo, GeoPoint, Heading, LocalPoint};
use crate::vehicle::{PwmSignal, Vehicle, VehicleState};

use super::guidance::{cross_track, GuidanceConfig, Mission, MissionTracker, Waypoint};
use super::pid::{pid_heading, PidGains, PidState};

/// Pass/fail limits for a tuning run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneCriteria {
    /// Heading-error sign changes allowed while settling.
    pub max_oscillations: usize,
    /// Steering sign reversals per second above which output is chatter.
    pub max_chatter_rate: f64,
    /// Steering magnitude below which a sign change is not counted.
    pub chatter_floor: f64,
    /// Mean cross-track offset allowed once on the line, m.
    pub max_bias: f64,
    /// Rise time allowed relative to the fastest possible turn.
    pub rise_factor: f64,
    /// Fixed slack added to the rise-time limit, s.
    pub rise_slack: f64,
}

impl Default for TuneCriteria {
    fn default() -> Self {
        TuneCriteria {
            max_oscillations: 3,
            max_chatter_rate: 2.0,
            chatter_floor: 0.02,
            max_bias: 0.5,
            rise_factor: 1.5,
            rise_slack: 1.0,
        }
    }
}

/// The scripted test environment.
#[derive(Debug, Clone)]
pub struct TuningRig {
    pub vehicle: Vehicle,
    pub guidance: GuidanceConfig,
    pub env: EnvironmentField,
    pub dt: f64,
    /// Water speed for the scripted runs, m/s.
    pub cruise: f64,
    /// Heading step used for the responsiveness test, rad.
    pub step: f64,
    pub criteria: TuneCriteria,
    pub max_iterations: usize,
}

impl TuningRig {
    pub fn calm(vehicle: Vehicle) -> Self {
        TuningRig {
            guidance: GuidanceConfig {
                v_max: vehicle.params.v_max,
                ..GuidanceConfig::default()
            },
            vehicle,
            env: EnvironmentField::calm(5.0),
            dt: 0.05,
            cruise: 4.0,
            step: core::f64::consts::FRAC_PI_2,
            criteria: TuneCriteria::default(),
            max_iterations: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TuneMetrics {
    /// Seconds until the heading error first falls under 10% of the step.
    pub rise_time: f64,
    pub rise_limit: f64,
    pub oscillations: usize,
    pub chatter_rate: f64,
    /// Mean signed cross-track error over the second half of the line run.
    pub bias: f64,
    /// Corner waypoints passed without entering the acceptance radius.
    pub missed_waypoints: usize,
}

impl TuneMetrics {
    pub fn passes(&self, c: &TuneCriteria) -> bool {
        self.rise_time <= self.rise_limit
            && self.oscillations <= c.max_oscillations
            && self.chatter_rate <= c.max_chatter_rate
            && self.bias.abs() < c.max_bias
            && self.missed_waypoints == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub gains: PidGains,
    pub metrics: TuneMetrics,
    pub iterations: usize,
    pub converged: bool,
}

fn throttle_pwm(rig: &TuningRig, v_water: f64) -> PwmSignal {
    rig.vehicle
        .throttle
        .pwm_for(rig.guidance.speed_throttle(rig.cruise, v_water))
}

fn sign_changes(values: &[f64], floor: f64) -> usize {
    let mut last = 0.0f64;
    let mut n = 0;
    for &v in values {
        if v.abs() < floor {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            n += 1;
        }
        last = v;
    }
    n
}

/// Heading step at cruise speed: rise time, heading-error oscillations and
/// steering chatter.
pub fn step_test(rig: &TuningRig, gains: &PidGains) -> (f64, usize, f64) {
    let p = &rig.vehicle.params;
    let mut state = VehicleState::at_rest(p, LocalPoint::ORIGIN, Heading::NORTH);
    state.v_water = rig.cruise.min(p.v_max);
    let target = Heading::NORTH.rotated(rig.step);
    let mut pid = PidState::default();
    let duration = 30.0;
    let steps = (duration / rig.dt) as usize;
    let mut errors = Vec::with_capacity(steps);
    let mut outputs = Vec::with_capacity(steps);
    let mut rise = f64::INFINITY;
    for k in 0..steps {
        let e = state.psi.error_to(target);
        if rise.is_infinite() && e.abs() <= 0.1 * rig.step.abs() {
            rise = k as f64 * rig.dt;
        }
        let u = pid_heading(gains, target, state.psi, rig.dt, &mut pid);
        errors.push(e);
        outputs.push(u);
        let steer = rig.vehicle.steering.pwm_for(u);
        state = rig
            .vehicle
            .step(
                &state,
                steer,
                throttle_pwm(rig, state.v_water),
                &rig.env,
                rig.dt,
            )
            .expect("rig time step is valid");
    }
    // heading error crossings, ignoring sub-degree dither around zero
    let oscillations = sign_changes(&errors, 0.2f64.to_radians());
    let chatter = sign_changes(&outputs, rig.criteria.chatter_floor) as f64 / duration;
    (rise, oscillations, chatter)
}

/// Line following from a lateral offset, then a right-angle corner.
/// Returns the steady-state cross-track bias and the number of corner
/// waypoints passed without acceptance.
pub fn line_test(rig: &TuningRig, gains: &PidGains) -> (f64, usize) {
    let origin = GeoPoint {
        lat: 34.0,
        lon: -81.0,
    };
    let pts = [LocalPoint::new(0.0, 150.0), LocalPoint::new(60.0, 150.0)];
    let waypoints = pts
        .iter()
        .map(|p| Waypoint {
            target: local_to_geo(origin, *p).expect("rig points are near the origin"),
            speed: rig.cruise,
        })
        .collect();
    let mission = Mission {
        id: 0,
        waypoints,
        home: origin,
    };
    let mut tracker = MissionTracker::new(mission, origin).expect("rig mission is local");
    let p = &rig.vehicle.params;
    let mut state = VehicleState::at_rest(p, LocalPoint::new(6.0, 0.0), Heading::NORTH);
    state.v_water = rig.cruise.min(p.v_max);
    tracker.begin_leg_from(LocalPoint::ORIGIN);

    let mut pid = PidState::default();
    let mut xte = Vec::new();
    let mut closest = vec![f64::INFINITY; pts.len()];
    let mut missed = 0;
    let mut counted = vec![false; pts.len()];
    let limit = 120.0;
    let steps = (limit / rig.dt) as usize;
    for _ in 0..steps {
        let active = tracker.active();
        if let Some(&target) = tracker.targets().get(active) {
            let d = state.pos.distance(target);
            // a closest approach outside the radius is a miss on that pass
            if d > closest[active] + 0.5 && closest[active] > gains.wp_radius && !counted[active] {
                missed += 1;
                counted[active] = true;
            }
            closest[active] = closest[active].min(d);
        }
        let g = tracker.update(state.pos, state.psi, state.v_water, gains, &rig.guidance);
        if g.done {
            break;
        }
        if g.active == 0 && state.pos.north > 75.0 {
            xte.push(cross_track(LocalPoint::ORIGIN, pts[0], state.pos));
        }
        let u = pid_heading(gains, g.psi_des, state.psi, rig.dt, &mut pid);
        state = rig
            .vehicle
            .step(
                &state,
                rig.vehicle.steering.pwm_for(u),
                rig.vehicle.throttle.pwm_for(g.throttle),
                &rig.env,
                rig.dt,
            )
            .expect("rig time step is valid");
    }
    if !tracker.is_done() {
        missed += tracker.targets().len() - tracker.active();
    }
    let bias = if xte.is_empty() {
        f64::INFINITY
    } else {
        xte.iter().sum::<f64>() / xte.len() as f64
    };
    (bias, missed)
}

pub fn evaluate(rig: &TuningRig, gains: &PidGains) -> TuneMetrics {
    let (rise_time, oscillations, chatter_rate) = step_test(rig, gains);
    let (bias, missed_waypoints) = line_test(rig, gains);
    let yaw_rate_max = rig.cruise.min(rig.vehicle.params.v_max) / rig.vehicle.params.r_min;
    let rise_limit =
        rig.criteria.rise_factor * rig.step.abs() / yaw_rate_max + rig.criteria.rise_slack;
    TuneMetrics {
        rise_time,
        rise_limit,
        oscillations,
        chatter_rate,
        bias,
        missed_waypoints,
    }
}

/// Iteratively adjusts gains until every criterion passes. `Err` carries the
/// best gains found when the iteration budget runs out.
pub fn auto_tune(rig: &TuningRig, initial: PidGains) -> Result<TuneReport, TuneReport> {
    let c = rig.criteria;
    let mut gains = initial;
    let mut best: Option<(usize, TuneReport)> = None;
    for iteration in 0..=rig.max_iterations {
        let m = evaluate(rig, &gains);
        let report = TuneReport {
            gains,
            metrics: m,
            iterations: iteration,
            converged: m.passes(&c),
        };
        if report.converged {
            return Ok(report);
        }
        let failures = [
            m.rise_time > m.rise_limit,
            m.oscillations > c.max_oscillations,
            m.chatter_rate > c.max_chatter_rate,
            m.bias.abs() >= c.max_bias,
            m.missed_waypoints > 0,
        ]
        .iter()
        .filter(|f| **f)
        .count();
        if best.as_ref().is_none_or(|(n, _)| failures < *n) {
            best = Some((failures, report.clone()));
        }

        if m.chatter_rate > c.max_chatter_rate {
            if gains.d > 1e-4 {
                gains.d *= 0.5;
            } else {
                gains.p *= 0.8;
            }
        } else if m.oscillations > c.max_oscillations {
            gains.p *= 0.8;
            gains.d += 0.005;
        } else if m.rise_time > m.rise_limit {
            gains.p *= 1.5;
        } else if m.bias.abs() >= c.max_bias {
            gains.i += 0.05;
        } else if m.missed_waypoints > 0 {
            gains.wp_radius += 1.0;
        }
    }
    let (_, mut report) = best.expect("at least one iteration ran");
    report.iterations = rig.max_iterations;
    Err(report)
}
