use core::fmt;

/// Operating mode of one vehicle. Exactly one is active at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Mode {
    /// Factory joystick drives the servos through the manual/auto switch.
    ManualOnboard,
    /// Steering and throttle passed through from RC channels 1 and 3.
    ManualRc,
    /// Waypoint following with the ground station in the loop.
    AutoWpOffboard,
    /// Waypoint following decided entirely on board.
    AutoWpOnboard,
    /// External steering/speed setpoints.
    VelocityControl,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::ManualOnboard,
        Mode::ManualRc,
        Mode::AutoWpOffboard,
        Mode::AutoWpOnboard,
        Mode::VelocityControl,
    ];

    pub fn code(self) -> u8 {
        match self {
            Mode::ManualOnboard => 0,
            Mode::ManualRc => 1,
            Mode::AutoWpOffboard => 2,
            Mode::AutoWpOnboard => 3,
            Mode::VelocityControl => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Mode> {
        Mode::ALL.get(code as usize).copied()
    }

    pub fn is_auto(self) -> bool {
        matches!(
            self,
            Mode::AutoWpOffboard | Mode::AutoWpOnboard | Mode::VelocityControl
        )
    }

    pub fn is_waypoint(self) -> bool {
        matches!(self, Mode::AutoWpOffboard | Mode::AutoWpOnboard)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::ManualOnboard => "MANUAL_ONBOARD",
            Mode::ManualRc => "MANUAL_RC",
            Mode::AutoWpOffboard => "AUTO_WP_OFFBOARD",
            Mode::AutoWpOnboard => "AUTO_WP_ONBOARD",
            Mode::VelocityControl => "VELOCITY_CONTROL",
        }
    }

    pub fn from_name(name: &str) -> Option<Mode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One entry of the channel-5 table: pulses in `[lo_us, hi_us)` select `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeBand {
    pub lo_us: u16,
    pub hi_us: u16,
    pub mode: Mode,
}

/// Channel-5 band table. A 3-position and a 2-position switch mix into six
/// distinct pulse widths; five modes are assigned and the sixth position
/// doubles up on a safe mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeTable {
    pub bands: [ModeBand; 6],
}

impl Default for ModeTable {
    fn default() -> Self {
        let b = |lo_us, hi_us, mode| ModeBand { lo_us, hi_us, mode };
        ModeTable {
            bands: [
                b(900, 1230, Mode::ManualRc),
                b(1230, 1360, Mode::AutoWpOffboard),
                b(1360, 1490, Mode::AutoWpOnboard),
                b(1490, 1620, Mode::VelocityControl),
                b(1620, 1750, Mode::ManualRc),
                b(1750, 2100, Mode::AutoWpOnboard),
            ],
        }
    }
}

impl ModeTable {
    /// Index of the band containing `ch5_us`. Pulses below the first band
    /// clamp to it, pulses at or above the last band's upper edge clamp to
    /// the last band.
    pub fn band_index(&self, ch5_us: u16) -> usize {
        if ch5_us < self.bands[0].lo_us {
            return 0;
        }
        self.bands
            .iter()
            .position(|b| ch5_us >= b.lo_us && ch5_us < b.hi_us)
            .unwrap_or(self.bands.len() - 1)
    }

    pub fn lookup(&self, ch5_us: u16) -> Mode {
        self.bands[self.band_index(ch5_us)].mode
    }

    /// Midpoint pulse of the first band that selects `mode`.
    pub fn pulse_for(&self, mode: Mode) -> Option<u16> {
        self.bands
            .iter()
            .find(|b| b.mode == mode)
            .map(|b| b.lo_us + (b.hi_us - b.lo_us) / 2)
    }
}
