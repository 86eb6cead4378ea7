//! Message set and little-endian payload layouts.
//!
//! | id | message          | payload                                                        | bytes  |
//! |----|------------------|----------------------------------------------------------------|--------|
//! | 0  | Heartbeat        | mode u8, engine u8, armed u8                                   | 3      |
//! | 1  | Telemetry        | lat f64, lon f64, psi f32, v_water f32, vg_east f32, vg_north f32, fuel f32, t f64 | 44 |
//! | 2  | SetMode          | mode u8                                                        | 1      |
//! | 3  | Kill             | (empty)                                                        | 0      |
//! | 4  | MissionCount     | mission_id u16, count u16, home_lat f64, home_lon f64         | 20     |
//! | 5  | MissionItem      | mission_id u16, index u16, lat f64, lon f64, speed f64        | 28     |
//! | 6  | MissionAck       | mission_id u16, status u8                                      | 3      |
//! | 7  | MissionRequest   | mission_id u16, index u16                                      | 4      |
//! | 8  | VelocitySetpoint | steering f32, speed f32                                        | 8      |
//! | 9  | SensorReport     | kind u8, quality u8, t f64, lat f64, lon f64, psi f32, n u8, n × f32 | 31 + 4n |
//!
//! Mode codes: 0 MANUAL_ONBOARD, 1 MANUAL_RC, 2 AUTO_WP_OFFBOARD,
//! 3 AUTO_WP_ONBOARD, 4 VELOCITY_CONTROL. Engine codes: 0 running, 1 killed,
//! 2 out of fuel. Ack status: 0 accepted, 1 failed, 2 invalid. Sensor kind:
//! 0 depth, 1 wind, 2 current. Quality: 0 ok, 1 suspect, 2 undefined.
//! `psi` is radians clockwise from north; speeds are m/s; `fuel` is liters;
//! `t` is simulation seconds.

use alloc::vec::Vec;

use crate::autopilot::Mode;
use crate::sensing::{Quality, SensorKind};
use crate::vehicle::EngineState;

use super::FrameError;

/// Largest payload the one-byte length field can describe.
pub const MAX_PAYLOAD: usize = 255;
/// Largest value count that fits in a sensor report.
pub const MAX_REPORT_VALUES: usize = (MAX_PAYLOAD - 31) / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Heartbeat {
    pub mode: Mode,
    pub engine: EngineState,
    pub armed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Telemetry {
    pub lat: f64,
    pub lon: f64,
    pub psi: f32,
    pub v_water: f32,
    pub vg_east: f32,
    pub vg_north: f32,
    pub fuel: f32,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MissionCount {
    pub mission_id: u16,
    pub count: u16,
    pub home_lat: f64,
    pub home_lon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MissionItem {
    pub mission_id: u16,
    pub index: u16,
    pub lat: f64,
    pub lon: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AckStatus {
    Accepted,
    Failed,
    Invalid,
}

impl AckStatus {
    pub fn code(self) -> u8 {
        match self {
            AckStatus::Accepted => 0,
            AckStatus::Failed => 1,
            AckStatus::Invalid => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(AckStatus::Accepted),
            1 => Some(AckStatus::Failed),
            2 => Some(AckStatus::Invalid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MissionAck {
    pub mission_id: u16,
    pub status: AckStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MissionRequest {
    pub mission_id: u16,
    pub index: u16,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensorReport {
    pub kind: SensorKind,
    pub quality: Quality,
    pub t: f64,
    pub lat: f64,
    pub lon: f64,
    pub psi: f32,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum Message {
    Heartbeat(Heartbeat),
    Telemetry(Telemetry),
    SetMode { mode: Mode },
    Kill,
    MissionCount(MissionCount),
    MissionItem(MissionItem),
    MissionAck(MissionAck),
    MissionRequest(MissionRequest),
    VelocitySetpoint { steering: f32, speed: f32 },
    SensorReport(SensorReport),
}

impl Message {
    pub fn msg_id(&self) -> u8 {
        match self {
            Message::Heartbeat(_) => 0,
            Message::Telemetry(_) => 1,
            Message::SetMode { .. } => 2,
            Message::Kill => 3,
            Message::MissionCount(_) => 4,
            Message::MissionItem(_) => 5,
            Message::MissionAck(_) => 6,
            Message::MissionRequest(_) => 7,
            Message::VelocitySetpoint { .. } => 8,
            Message::SensorReport(_) => 9,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Message::Heartbeat(_) => "heartbeat",
            Message::Telemetry(_) => "telemetry",
            Message::SetMode { .. } => "set_mode",
            Message::Kill => "kill",
            Message::MissionCount(_) => "mission_count",
            Message::MissionItem(_) => "mission_item",
            Message::MissionAck(_) => "mission_ack",
            Message::MissionRequest(_) => "mission_request",
            Message::VelocitySetpoint { .. } => "velocity_setpoint",
            Message::SensorReport(_) => "sensor_report",
        }
    }

    pub fn payload_len(&self) -> usize {
        match self {
            Message::Heartbeat(_) => 3,
            Message::Telemetry(_) => 44,
            Message::SetMode { .. } => 1,
            Message::Kill => 0,
            Message::MissionCount(_) => 20,
            Message::MissionItem(_) => 28,
            Message::MissionAck(_) => 3,
            Message::MissionRequest(_) => 4,
            Message::VelocitySetpoint { .. } => 8,
            Message::SensorReport(r) => 31 + 4 * r.values.len(),
        }
    }

    /// Appends the payload bytes to `out`.
    pub fn write_payload(&self, out: &mut Vec<u8>) -> Result<(), FrameError> {
        let len = self.payload_len();
        if len > MAX_PAYLOAD {
            return Err(FrameError::PayloadTooLarge(len));
        }
        match self {
            Message::Heartbeat(h) => {
                out.extend_from_slice(&[h.mode.code(), h.engine.code(), h.armed as u8]);
            }
            Message::Telemetry(t) => {
                put_f64(out, t.lat);
                put_f64(out, t.lon);
                for v in [t.psi, t.v_water, t.vg_east, t.vg_north, t.fuel] {
                    put_f32(out, v);
                }
                put_f64(out, t.t);
            }
            Message::SetMode { mode } => out.push(mode.code()),
            Message::Kill => {}
            Message::MissionCount(c) => {
                put_u16(out, c.mission_id);
                put_u16(out, c.count);
                put_f64(out, c.home_lat);
                put_f64(out, c.home_lon);
            }
            Message::MissionItem(i) => {
                put_u16(out, i.mission_id);
                put_u16(out, i.index);
                put_f64(out, i.lat);
                put_f64(out, i.lon);
                put_f64(out, i.speed);
            }
            Message::MissionAck(a) => {
                put_u16(out, a.mission_id);
                out.push(a.status.code());
            }
            Message::MissionRequest(r) => {
                put_u16(out, r.mission_id);
                put_u16(out, r.index);
            }
            Message::VelocitySetpoint { steering, speed } => {
                put_f32(out, *steering);
                put_f32(out, *speed);
            }
            Message::SensorReport(r) => {
                out.push(r.kind.code());
                out.push(r.quality.code());
                put_f64(out, r.t);
                put_f64(out, r.lat);
                put_f64(out, r.lon);
                put_f32(out, r.psi);
                out.push(r.values.len() as u8);
                for v in &r.values {
                    put_f32(out, *v);
                }
            }
        }
        Ok(())
    }

    pub fn read_payload(msg_id: u8, payload: &[u8]) -> Result<Message, FrameError> {
        let mut r = Reader {
            buf: payload,
            pos: 0,
        };
        let msg = match msg_id {
            0 => Message::Heartbeat(Heartbeat {
                mode: Mode::from_code(r.u8()?).ok_or(FrameError::InvalidField("mode"))?,
                engine: EngineState::from_code(r.u8()?)
                    .ok_or(FrameError::InvalidField("engine"))?,
                armed: match r.u8()? {
                    0 => false,
                    1 => true,
                    _ => return Err(FrameError::InvalidField("armed")),
                },
            }),
            1 => Message::Telemetry(Telemetry {
                lat: r.f64()?,
                lon: r.f64()?,
                psi: r.f32()?,
                v_water: r.f32()?,
                vg_east: r.f32()?,
                vg_north: r.f32()?,
                fuel: r.f32()?,
                t: r.f64()?,
            }),
            2 => Message::SetMode {
                mode: Mode::from_code(r.u8()?).ok_or(FrameError::InvalidField("mode"))?,
            },
            3 => Message::Kill,
            4 => Message::MissionCount(MissionCount {
                mission_id: r.u16()?,
                count: r.u16()?,
                home_lat: r.f64()?,
                home_lon: r.f64()?,
            }),
            5 => Message::MissionItem(MissionItem {
                mission_id: r.u16()?,
                index: r.u16()?,
                lat: r.f64()?,
                lon: r.f64()?,
                speed: r.f64()?,
            }),
            6 => Message::MissionAck(MissionAck {
                mission_id: r.u16()?,
                status: AckStatus::from_code(r.u8()?).ok_or(FrameError::InvalidField("status"))?,
            }),
            7 => Message::MissionRequest(MissionRequest {
                mission_id: r.u16()?,
                index: r.u16()?,
            }),
            8 => Message::VelocitySetpoint {
                steering: r.f32()?,
                speed: r.f32()?,
            },
            9 => {
                let kind =
                    SensorKind::from_code(r.u8()?).ok_or(FrameError::InvalidField("kind"))?;
                let quality =
                    Quality::from_code(r.u8()?).ok_or(FrameError::InvalidField("quality"))?;
                let t = r.f64()?;
                let lat = r.f64()?;
                let lon = r.f64()?;
                let psi = r.f32()?;
                let n = r.u8()? as usize;
                let values = (0..n).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
                Message::SensorReport(SensorReport {
                    kind,
                    quality,
                    t,
                    lat,
                    lon,
                    psi,
                    values,
                })
            }
            id => return Err(FrameError::UnknownMsg(id)),
        };
        if r.pos != payload.len() {
            return Err(FrameError::BadLength);
        }
        Ok(msg)
    }
}

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], FrameError> {
        let bytes = self
            .buf
            .get(self.pos..self.pos + N)
            .ok_or(FrameError::BadLength)?;
        self.pos += N;
        let mut a = [0u8; N];
        a.copy_from_slice(bytes);
        Ok(a)
    }

    fn u8(&mut self) -> Result<u8, FrameError> {
        Ok(self.take::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16, FrameError> {
        Ok(u16::from_le_bytes(self.take()?))
    }

    fn f32(&mut self) -> Result<f32, FrameError> {
        Ok(f32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, FrameError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}
