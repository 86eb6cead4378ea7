use crate::geo::Heading;

/// Heading-loop gains plus the waypoint acceptance radius that the tuning
/// procedure adjusts alongside them.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PidGains {
    pub p: f64,
    pub i: f64,
    pub d: f64,
    /// Largest contribution of the integral term, as an output fraction.
    pub i_clamp: f64,
    /// Waypoint acceptance radius, m.
    pub wp_radius: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains {
            p: 2.0,
            i: 0.2,
            d: 0.005,
            i_clamp: 0.2,
            wp_radius: 5.0,
        }
    }
}

impl PidGains {
    pub fn is_valid(&self) -> bool {
        let finite = [self.p, self.i, self.d, self.i_clamp, self.wp_radius]
            .iter()
            .all(|v| v.is_finite());
        finite
            && self.p >= 0.0
            && self.i >= 0.0
            && self.d >= 0.0
            && self.i_clamp >= 0.0
            && self.wp_radius > 0.0
    }

    fn integral_limit(&self) -> f64 {
        self.i_clamp / self.i.max(1e-9)
    }
}

/// Controller memory between ticks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
}

impl PidState {
    pub fn reset(&mut self) {
        *self = PidState::default();
    }
}

/// One heading-controller update; returns a steering fraction in `[-1, 1]`
/// (positive turns to starboard).
///
/// The integral is frozen whenever the output saturates.
pub fn pid_heading(
    gains: &PidGains,
    psi_des: Heading,
    psi: Heading,
    dt: f64,
    state: &mut PidState,
) -> f64 {
    let e = psi.error_to(psi_des);
    let derivative = match state.prev_error {
        Some(prev) if dt > 0.0 => (e - prev) / dt,
        _ => 0.0,
    };
    state.prev_error = Some(e);

    let limit = gains.integral_limit();
    let candidate = (state.integral + e * dt).clamp(-limit, limit);
    let raw = gains.p * e + gains.i * candidate + gains.d * derivative;
    if raw.abs() <= 1.0 {
        state.integral = candidate;
        raw
    } else {
        let held = gains.p * e + gains.i * state.integral + gains.d * derivative;
        held.clamp(-1.0, 1.0)
    }
}
