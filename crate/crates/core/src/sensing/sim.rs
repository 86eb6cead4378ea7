//! Simulated depth sounder, anemometer and current meter.

use alloc::vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::env::EnvironmentField;
use crate::error::{Error, Result};
use crate::geo::{boat_to_world, local_to_geo, rotate_world_to_boat, GeoPoint, Vector2};
use crate::vehicle::VehicleState;

use super::sample::{Quality, SensorKind, SensorSample};

/// Probability that a depth ping is spoiled by air under the transducer,
/// rising linearly with water speed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AerationModel {
    /// Speed at or below which no corruption occurs, m/s.
    pub onset_speed: f64,
    /// Speed at which the rate reaches `max_rate`, m/s.
    pub full_speed: f64,
    pub max_rate: f64,
}

impl Default for AerationModel {
    fn default() -> Self {
        AerationModel {
            onset_speed: 2.0,
            full_speed: 21.7 / 3.6,
            max_rate: 0.15,
        }
    }
}

impl AerationModel {
    pub fn rate(&self, v_water: f64) -> f64 {
        if !(v_water > self.onset_speed) {
            return 0.0;
        }
        let span = (self.full_speed - self.onset_speed).max(1e-9);
        (self.max_rate * (v_water - self.onset_speed) / span).clamp(0.0, self.max_rate)
    }
}

/// Measurement noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SensorNoise {
    /// Depth, m.
    pub depth_sd: f64,
    /// Wind and current components, m/s.
    pub vector_sd: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        SensorNoise {
            depth_sd: 0.05,
            vector_sd: 0.1,
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    if sd > 0.0 {
        Normal::new(0.0, sd).map_or(0.0, |n| n.sample(rng))
    } else {
        0.0
    }
}

/// One depth ping. Corrupted pings are either undefined (flagged) or read
/// 2–10 times the true depth while still marked `Ok`.
pub fn sample_depth<R: Rng + ?Sized>(
    env: &EnvironmentField,
    state: &VehicleState,
    origin: GeoPoint,
    rng: &mut R,
    noise_sd: f64,
    aeration: &AerationModel,
) -> Result<SensorSample> {
    let truth = env.depth_at(state.pos);
    let noise = gaussian(rng, noise_sd);
    let corrupt = rng.random::<f64>() < aeration.rate(state.v_water);
    let (value, quality) = if corrupt {
        if rng.random::<bool>() {
            (f64::NAN, Quality::Undefined)
        } else {
            // (2, 10]: `random` is in [0, 1), so 1 - u is in (0, 1]
            let factor = 2.0 + 8.0 * (1.0 - rng.random::<f64>());
            (truth * factor, Quality::Ok)
        }
    } else {
        ((truth + noise).max(0.0), Quality::Ok)
    };
    Ok(SensorSample {
        t: state.t,
        pos: local_to_geo(origin, state.pos)?,
        psi: state.psi,
        kind: SensorKind::Depth,
        raw: vec![value],
        quality,
        v_ground: Some(state.v_ground),
    })
}

/// Wind or current as felt by the moving boat, in (forward, starboard).
pub fn measure_relative(
    env: &EnvironmentField,
    state: &VehicleState,
    kind: SensorKind,
) -> Result<Vector2> {
    let field = match kind {
        SensorKind::Wind => env.wind_at(state.pos),
        SensorKind::Current => env.current_at(state.pos),
        SensorKind::Depth => return Err(Error::NotAVectorSample),
    };
    Ok(rotate_world_to_boat(field - state.v_ground, state.psi))
}

/// A noisy wind or current sample logged with the ground velocity needed
/// to recover the world-frame field.
pub fn sample_vector<R: Rng + ?Sized>(
    env: &EnvironmentField,
    state: &VehicleState,
    origin: GeoPoint,
    kind: SensorKind,
    rng: &mut R,
    noise_sd: f64,
) -> Result<SensorSample> {
    let rel = measure_relative(env, state, kind)?;
    let nf = gaussian(rng, noise_sd);
    let ns = gaussian(rng, noise_sd);
    Ok(SensorSample {
        t: state.t,
        pos: local_to_geo(origin, state.pos)?,
        psi: state.psi,
        kind,
        raw: vec![rel.x + nf, rel.y + ns],
        quality: Quality::Ok,
        v_ground: Some(state.v_ground),
    })
}

/// World-frame field vector from a boat-relative sample.
pub fn to_world(sample: &SensorSample) -> Result<Vector2> {
    let rel = sample.relative().ok_or(Error::NotAVectorSample)?;
    let v_ground = sample.v_ground.ok_or(Error::MissingGroundVelocity)?;
    boat_to_world(rel, sample.psi, v_ground)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DepthModel, FlowField};
    use crate::geo::{Heading, LocalPoint};
    use crate::vehicle::VehicleParams;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn origin() -> GeoPoint {
        GeoPoint::new(34.0, -81.0).unwrap()
    }

    fn state(v_water: f64, psi: Heading, v_ground: Vector2) -> VehicleState {
        let mut s =
            VehicleState::at_rest(&VehicleParams::default(), LocalPoint::new(10.0, 20.0), psi);
        s.v_water = v_water;
        s.v_ground = v_ground;
        s
    }

    #[test]
    fn noiseless_depth() {
        let env = EnvironmentField::calm(5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_depth(
            &env,
            &state(0.0, Heading::NORTH, Vector2::ZERO),
            origin(),
            &mut rng,
            0.0,
            &AerationModel::default(),
        )
        .unwrap();
        assert_eq!(s.raw, vec![5.0]);
        assert_eq!(s.quality, Quality::Ok);
    }

    #[test]
    fn aeration_rate_profile() {
        let a = AerationModel::default();
        assert_eq!(a.rate(0.0), 0.0);
        assert_eq!(a.rate(2.0), 0.0);
        assert!((a.rate(a.full_speed) - 0.15).abs() < 1e-12);
        assert!(a.rate(3.0) > 0.0 && a.rate(3.0) < 0.15);
    }

    #[test]
    fn stationary_current_points_astern() {
        let env = EnvironmentField::uniform(Vector2::new(0.0, -1.0), Vector2::ZERO, 5.0);
        let rel = measure_relative(
            &env,
            &state(0.0, Heading::NORTH, Vector2::ZERO),
            SensorKind::Current,
        )
        .unwrap();
        assert!((rel.x + 1.0).abs() < 1e-12 && rel.y.abs() < 1e-12);
    }

    #[test]
    fn drifting_with_current_reads_zero() {
        let c = Vector2::new(0.7, -0.4);
        let env = EnvironmentField::new(
            FlowField::Uniform(c),
            FlowField::CALM,
            DepthModel::Flat(5.0),
        );
        let rel = measure_relative(
            &env,
            &state(0.0, Heading::new(1.0).unwrap(), c),
            SensorKind::Current,
        )
        .unwrap();
        assert!(rel.norm() < 1e-12);
    }

    #[test]
    fn to_world_requires_vector_and_ground_velocity() {
        let env = EnvironmentField::calm(5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let st = state(2.0, Heading::EAST, Vector2::new(2.0, 0.0));
        let mut s = sample_vector(&env, &st, origin(), SensorKind::Wind, &mut rng, 0.0).unwrap();
        assert!(to_world(&s).unwrap().norm() < 1e-12);
        s.v_ground = None;
        assert_eq!(to_world(&s), Err(Error::MissingGroundVelocity));
        let d = sample_depth(
            &env,
            &st,
            origin(),
            &mut rng,
            0.0,
            &AerationModel::default(),
        )
        .unwrap();
        assert_eq!(to_world(&d), Err(Error::NotAVectorSample));
    }
}
