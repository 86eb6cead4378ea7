//! Onboard controller: mode state machine, RC decoding, kill circuit, heading
//! PID, waypoint guidance and velocity-setpoint control.

pub mod control;
pub mod guidance;
pub mod mode;
pub mod pid;
pub mod safety;
pub mod tune;

pub use control::{
    Autopilot, AutopilotConfig, Command, Joystick, KillReason, TickInputs, TickOutput,
};
pub use guidance::{
    cross_track, GuidanceConfig, GuidanceOutput, Mission, MissionTracker, Waypoint,
};
pub use mode::{Mode, ModeBand, ModeTable};
pub use pid::{pid_heading, PidGains, PidState};
pub use safety::{evaluate_kill, resolve_mode, KillDecision, RcFrame, SafetyInputs};
pub use tune::{auto_tune, TuneCriteria, TuneMetrics, TuneReport, TuningRig};
