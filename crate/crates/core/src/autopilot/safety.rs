//! RC channel decoding, mode resolution and the kill circuit.

use super::mode::{Mode, ModeTable};

/// Pulses on channel 6 below this width command a kill.
pub const KILL_CHANNEL_LOW_US: u16 = 1300;

/// The channels this vehicle uses from the hand-held transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RcFrame {
    /// Steering.
    pub ch1_us: u16,
    /// Throttle.
    pub ch3_us: u16,
    /// Mode switch mix.
    pub ch5_us: u16,
    /// Kill switch, active low.
    pub ch6_us: u16,
    /// Seconds since the frame was received.
    pub age: f64,
}

impl RcFrame {
    /// Sticks centered, kill released, mode switch on `ch5_us`.
    pub fn neutral(ch5_us: u16) -> Self {
        RcFrame {
            ch1_us: 1500,
            ch3_us: 1500,
            ch5_us,
            ch6_us: 1900,
            age: 0.0,
        }
    }

    pub fn is_stale(&self, rc_timeout: f64) -> bool {
        !(self.age <= rc_timeout)
    }

    pub fn kill_commanded(&self) -> bool {
        self.ch6_us < KILL_CHANNEL_LOW_US
    }
}

/// Hardware switch and power states that sit outside the autopilot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SafetyInputs {
    /// Manual/auto switch in the joystick box; `true` selects factory manual.
    pub hw_manual_switch: bool,
    /// Physical override that disables the autopilot kill relay.
    pub kill_override: bool,
    pub autopilot_powered: bool,
    /// Autopilot kill output; normal operation holds it high.
    pub kill_line_high: bool,
}

impl Default for SafetyInputs {
    fn default() -> Self {
        SafetyInputs {
            hw_manual_switch: false,
            kill_override: false,
            autopilot_powered: true,
            kill_line_high: true,
        }
    }
}

impl SafetyInputs {
    /// All sixteen combinations, in bit order
    /// (hw_manual, override, powered, line_high).
    pub fn all() -> impl Iterator<Item = SafetyInputs> {
        (0u8..16).map(|bits| SafetyInputs {
            hw_manual_switch: bits & 1 != 0,
            kill_override: bits & 2 != 0,
            autopilot_powered: bits & 4 != 0,
            kill_line_high: bits & 8 != 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum KillDecision {
    EngineAllowed,
    EngineKilled,
}

impl KillDecision {
    pub fn is_killed(self) -> bool {
        self == KillDecision::EngineKilled
    }
}

/// The relay is energized only while the autopilot is powered and holding
/// its kill line high; dropping either, or a low channel 6, grounds the
/// magneto. The override switch takes the relay out of the circuit.
pub fn evaluate_kill(safety: &SafetyInputs, rc: Option<&RcFrame>) -> KillDecision {
    if safety.kill_override {
        return KillDecision::EngineAllowed;
    }
    let rc_kill = rc.is_some_and(RcFrame::kill_commanded);
    if rc_kill || !safety.autopilot_powered || !safety.kill_line_high {
        KillDecision::EngineKilled
    } else {
        KillDecision::EngineAllowed
    }
}

/// Resolves the active mode from the hardware switch and channel 5.
///
/// The hardware manual switch wins over any radio input. With no radio, or
/// a frame older than `rc_timeout`, an automatic mode in `last` is held and
/// anything else degrades to `MANUAL_RC` (where the control loop then
/// kills the engine).
pub fn resolve_mode(
    safety: &SafetyInputs,
    rc: Option<&RcFrame>,
    table: &ModeTable,
    rc_timeout: f64,
    last: Mode,
) -> Mode {
    if safety.hw_manual_switch {
        return Mode::ManualOnboard;
    }
    match rc {
        Some(frame) if !frame.is_stale(rc_timeout) => table.lookup(frame.ch5_us),
        _ if last.is_auto() => last,
        _ => Mode::ManualRc,
    }
}
