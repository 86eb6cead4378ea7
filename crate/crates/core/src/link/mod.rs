//! Binary telemetry and command protocol, the lossy radio link model and
//! reliable mission upload.

pub mod channel;
pub mod crc;
pub mod frame;
pub mod message;
pub mod mission;

pub use channel::{Delivery, LinkModel, LinkStats, SimChannel};
pub use crc::crc16;
pub use frame::{
    decode, encode, encode_into, DecoderStats, Frame, FrameDecoder, MAGIC, MAX_FRAME, OVERHEAD,
};
pub use message::{
    AckStatus, Heartbeat, Message, MissionAck, MissionCount, MissionItem, MissionRequest,
    SensorReport, Telemetry, MAX_PAYLOAD, MAX_REPORT_VALUES,
};
pub use mission::{
    simulate_upload, MissionReceiver, MissionSender, UploadFailure, UploadReport, UploadStatus,
};

/// Heartbeat cadence on both sides of the link, s.
pub const HEARTBEAT_PERIOD: f64 = 1.0;
/// Missed heartbeats after which a link is considered lost.
pub const LOST_AFTER_MISSED: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FrameError {
    #[error("frame does not start with the magic byte")]
    BadMagic,
    #[error("frame is shorter than its declared length")]
    Truncated,
    #[error("frame or payload length does not match its layout")]
    BadLength,
    #[error("frame checksum mismatch")]
    CrcMismatch,
    #[error("unknown message id {0}")]
    UnknownMsg(u8),
    #[error("invalid value in field {0}")]
    InvalidField(&'static str),
    #[error("payload of {0} bytes exceeds the frame limit")]
    PayloadTooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LinkState {
    Connected,
    /// At least one heartbeat missed.
    Degraded,
    Lost,
}

impl LinkState {
    /// Classifies a link by the age of its newest heartbeat (`None` if no
    /// heartbeat was ever received).
    pub fn from_heartbeat_age(age: Option<f64>) -> LinkState {
        match age {
            Some(a) if a < 2.0 * HEARTBEAT_PERIOD => LinkState::Connected,
            Some(a) if a < LOST_AFTER_MISSED as f64 * HEARTBEAT_PERIOD => LinkState::Degraded,
            _ => LinkState::Lost,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LinkState::Connected => "connected",
            LinkState::Degraded => "degraded",
            LinkState::Lost => "lost",
        }
    }
}
