//! Fixed-step plant model of a jet-drive survey boat.
//!
//! The model is intentionally small: a first-order lag on water-relative
//! speed, yaw rate proportional to speed times nozzle deflection (so the
//! track curvature at full deflection is `1 / r_min` at any speed), current
//! advection, a small wind drift term and a throttle-linear fuel burn.

#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;

use crate::env::EnvironmentField;
use crate::error::{Error, Result};
use crate::geo::{rotate_boat_to_world, Heading, LocalPoint, Vector2};

/// Servo pulse width in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PwmSignal(pub u16);

impl PwmSignal {
    pub fn us(self) -> u16 {
        self.0
    }
}

/// Maps pulse widths to physical actuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ServoCalibration {
    pub min_us: u16,
    pub trim_us: u16,
    pub max_us: u16,
    pub reversed: bool,
}

impl Default for ServoCalibration {
    fn default() -> Self {
        ServoCalibration {
            min_us: 1100,
            trim_us: 1500,
            max_us: 1900,
            reversed: false,
        }
    }
}

impl ServoCalibration {
    pub fn new(min_us: u16, trim_us: u16, max_us: u16, reversed: bool) -> Result<Self> {
        let cal = ServoCalibration {
            min_us,
            trim_us,
            max_us,
            reversed,
        };
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_us < 800 || self.max_us > 2200 {
            return Err(Error::InvalidCalibration(
                "pulse widths must lie in [800, 2200] us",
            ));
        }
        if !(self.min_us < self.trim_us && self.trim_us < self.max_us) {
            return Err(Error::InvalidCalibration("require min < trim < max"));
        }
        Ok(())
    }

    pub fn trim(&self) -> PwmSignal {
        PwmSignal(self.trim_us)
    }

    pub fn clamp(&self, sig: PwmSignal) -> PwmSignal {
        PwmSignal(sig.0.clamp(self.min_us, self.max_us))
    }

    /// Inverse of [`pwm_to_normalized`], rounded to the nearest microsecond.
    pub fn pwm_for(&self, fraction: f64) -> PwmSignal {
        let mut f = if fraction.is_finite() {
            fraction.clamp(-1.0, 1.0)
        } else {
            0.0
        };
        if self.reversed {
            f = -f;
        }
        let trim = self.trim_us as f64;
        let us = if f >= 0.0 {
            trim + f * (self.max_us - self.trim_us) as f64
        } else {
            trim + f * (self.trim_us - self.min_us) as f64
        };
        PwmSignal(us.round() as u16)
    }
}

/// Piecewise-linear map of a pulse width to `[-1, 1]`: trim is 0, `max_us`
/// is +1, `min_us` is -1, with the sign flipped for reversed servos.
/// Out-of-range pulses are clamped first.
pub fn pwm_to_normalized(sig: PwmSignal, cal: &ServoCalibration) -> f64 {
    let p = cal.clamp(sig).0 as f64;
    let trim = cal.trim_us as f64;
    let f = if p >= trim {
        (p - trim) / (cal.max_us as f64 - trim)
    } else {
        (p - trim) / (trim - cal.min_us as f64)
    };
    if cal.reversed {
        -f
    } else {
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct VehicleParams {
    /// Top water-relative speed, m/s.
    pub v_max: f64,
    /// Turning radius at full nozzle deflection, m.
    pub r_min: f64,
    /// Nozzle deflection limit, rad.
    pub delta_max: f64,
    /// Speed lag time constant, s.
    pub tau_v: f64,
    /// Fuel tank capacity, L.
    pub fuel_capacity: f64,
    /// Burn at idle, L/h.
    pub rate_idle: f64,
    /// Burn at full throttle, L/h.
    pub rate_full: f64,
    /// Informational only; payload does not affect the dynamics.
    pub payload_max: f64,
    /// Ground drift per unit of true wind speed.
    pub wind_coeff: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            v_max: 21.7 / 3.6,
            r_min: 5.0,
            delta_max: 0.5,
            tau_v: 2.0,
            fuel_capacity: 9.8,
            rate_idle: 9.8 / 18.0,
            rate_full: 9.8 / 4.0,
            payload_max: 163.0,
            wind_coeff: 0.02,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.v_max,
            self.r_min,
            self.delta_max,
            self.tau_v,
            self.fuel_capacity,
            self.rate_idle,
            self.rate_full,
            self.wind_coeff,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("vehicle parameter"));
        }
        if self.v_max <= 0.0 {
            return Err(Error::InvalidParameter("v_max must be positive"));
        }
        if self.r_min <= 0.0 {
            return Err(Error::InvalidParameter("r_min must be positive"));
        }
        if self.delta_max <= 0.0 || self.tau_v <= 0.0 {
            return Err(Error::InvalidParameter(
                "delta_max and tau_v must be positive",
            ));
        }
        if !(self.rate_full > self.rate_idle && self.rate_idle > 0.0) {
            return Err(Error::InvalidParameter("require rate_full > rate_idle > 0"));
        }
        if self.fuel_capacity <= 0.0 {
            return Err(Error::InvalidParameter("fuel_capacity must be positive"));
        }
        if self.wind_coeff < 0.0 {
            return Err(Error::InvalidParameter("wind_coeff must be non-negative"));
        }
        Ok(())
    }

    /// Fuel burn in L/h at throttle fraction `u`.
    pub fn fuel_rate(&self, u: f64) -> f64 {
        self.rate_idle + (self.rate_full - self.rate_idle) * u.clamp(0.0, 1.0)
    }

    /// Hours a full tank lasts at a constant throttle fraction.
    pub fn fuel_endurance(&self, u: f64) -> f64 {
        self.fuel_capacity / self.fuel_rate(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EngineState {
    Running,
    Killed,
    FuelExhausted,
}

impl EngineState {
    pub fn code(self) -> u8 {
        match self {
            EngineState::Running => 0,
            EngineState::Killed => 1,
            EngineState::FuelExhausted => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(EngineState::Running),
            1 => Some(EngineState::Killed),
            2 => Some(EngineState::FuelExhausted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VehicleState {
    pub pos: LocalPoint,
    pub psi: Heading,
    /// Forward speed through the water, m/s.
    pub v_water: f64,
    /// Ground velocity over the last step, world frame.
    pub v_ground: Vector2,
    /// Liters remaining.
    pub fuel: f64,
    pub engine: EngineState,
    pub clutch_engaged: bool,
    /// Simulation time, s.
    pub t: f64,
}

impl VehicleState {
    /// Engine running, stationary, full tank.
    pub fn at_rest(params: &VehicleParams, pos: LocalPoint, psi: Heading) -> Self {
        VehicleState {
            pos,
            psi,
            v_water: 0.0,
            v_ground: Vector2::ZERO,
            fuel: params.fuel_capacity,
            engine: EngineState::Running,
            clutch_engaged: true,
            t: 0.0,
        }
    }
}

pub const MAX_STEP: f64 = 0.1;

/// A boat model: dynamics parameters plus the servo calibrations that turn
/// PWM into nozzle angle and throttle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Default)]
pub struct Vehicle {
    pub params: VehicleParams,
    pub steering: ServoCalibration,
    pub throttle: ServoCalibration,
}


impl Vehicle {
    pub fn new(
        params: VehicleParams,
        steering: ServoCalibration,
        throttle: ServoCalibration,
    ) -> Result<Self> {
        params.validate()?;
        steering.validate()?;
        throttle.validate()?;
        Ok(Vehicle {
            params,
            steering,
            throttle,
        })
    }

    /// Advances the state by `dt` seconds with explicit Euler integration.
    ///
    /// Negative throttle disengages the clutch: the engine keeps idling but
    /// the impeller produces no thrust.
    pub fn step(
        &self,
        state: &VehicleState,
        steering: PwmSignal,
        throttle: PwmSignal,
        env: &EnvironmentField,
        dt: f64,
    ) -> Result<VehicleState> {
        if !(dt > 0.0 && dt <= MAX_STEP) {
            return Err(Error::BadTimeStep(dt));
        }
        let p = &self.params;
        let steer = pwm_to_normalized(steering, &self.steering);
        let thr = pwm_to_normalized(throttle, &self.throttle);
        let running = state.engine == EngineState::Running;
        let clutch_engaged = thr >= 0.0;
        let u = if running && clutch_engaged { thr } else { 0.0 };

        let v = state.v_water;
        let delta = p.delta_max * steer;
        let yaw_rate = (v / p.r_min) * (delta / p.delta_max);
        let through_water = rotate_boat_to_world(Vector2::new(v, 0.0), state.psi);
        let ground =
            through_water + env.current_at(state.pos) + env.wind_at(state.pos) * p.wind_coeff;

        let mut next = *state;
        next.v_water = (v + (dt / p.tau_v) * (u * p.v_max - v)).clamp(0.0, p.v_max);
        next.pos += ground * dt;
        next.psi = state.psi.rotated(yaw_rate * dt);
        next.v_ground = ground;
        next.clutch_engaged = clutch_engaged;
        next.t = state.t + dt;
        if running {
            next.fuel = state.fuel - dt * p.fuel_rate(u) / 3600.0;
            if next.fuel <= 0.0 {
                next.fuel = 0.0;
                next.engine = EngineState::FuelExhausted;
            }
        }
        Ok(next)
    }

    /// Hours a full tank lasts at throttle fraction `u`.
    pub fn fuel_endurance(&self, u: f64) -> f64 {
        self.params.fuel_endurance(u)
    }
}

/// Grounds the magneto: thrust stops from the next step on.
pub fn apply_kill(state: &VehicleState) -> VehicleState {
    let mut s = *state;
    if s.engine == EngineState::Running {
        s.engine = EngineState::Killed;
    }
    s
}

/// Restarts a killed engine. An empty tank cannot be restarted.
pub fn start_engine(state: &VehicleState) -> VehicleState {
    let mut s = *state;
    if s.engine == EngineState::Killed && s.fuel > 0.0 {
        s.engine = EngineState::Running;
    }
    s
}
