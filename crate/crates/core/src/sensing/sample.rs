use alloc::vec::Vec;

use crate::geo::{GeoPoint, Heading, Vector2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SensorKind {
    Depth,
    Wind,
    Current,
}

impl SensorKind {
    pub const ALL: [SensorKind; 3] = [SensorKind::Depth, SensorKind::Wind, SensorKind::Current];

    pub fn code(self) -> u8 {
        match self {
            SensorKind::Depth => 0,
            SensorKind::Wind => 1,
            SensorKind::Current => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Depth => "depth",
            SensorKind::Wind => "wind",
            SensorKind::Current => "current",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_vector(self) -> bool {
        self != SensorKind::Depth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Quality {
    Ok,
    Suspect,
    Undefined,
}

impl Quality {
    pub const ALL: [Quality; 3] = [Quality::Ok, Quality::Suspect, Quality::Undefined];

    pub fn code(self) -> u8 {
        match self {
            Quality::Ok => 0,
            Quality::Suspect => 1,
            Quality::Undefined => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Quality::Ok => "ok",
            Quality::Suspect => "suspect",
            Quality::Undefined => "undefined",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.name() == name)
    }
}

/// One sensor reading as logged aboard.
///
/// `raw` is one value (depth in meters, positive down) for depth samples and
/// `[forward, starboard]` in m/s for wind and current. `v_ground` is the
/// vehicle ground velocity at sample time, needed to bring vector samples
/// into the world frame.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensorSample {
    pub t: f64,
    pub pos: GeoPoint,
    pub psi: Heading,
    pub kind: SensorKind,
    pub raw: Vec<f64>,
    pub quality: Quality,
    pub v_ground: Option<Vector2>,
}

impl SensorSample {
    pub fn value(&self) -> Option<f64> {
        self.raw.first().copied()
    }

    pub fn relative(&self) -> Option<Vector2> {
        match self.raw.as_slice() {
            [f, s] if self.kind.is_vector() => Some(Vector2::new(*f, *s)),
            _ => None,
        }
    }
}
