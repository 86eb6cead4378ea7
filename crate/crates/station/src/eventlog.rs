//! Session event log.
//!
//! A log is the 8-byte magic `ASVEVT01` followed by records. Each record is
//! a little-endian `u32` payload length and then the payload:
//!
//! | offset | size | field                               |
//! |--------|------|-------------------------------------|
//! | 0      | 1    | tag                                 |
//! | 1      | 8    | simulation time, f64 seconds        |
//! | 9      | 1    | sys_id (0 for session-wide records) |
//! | 10     | ..   | body, by tag                        |
//!
//! Bodies (all integers and floats little-endian):
//!
//! | tag | record        | body                                                                                 |
//! |-----|---------------|--------------------------------------------------------------------------------------|
//! | 0   | Session       | UTF-8 scenario TOML                                                                  |
//! | 1   | Track         | east, north, psi, v_water, fuel: f64; engine u8; mode u8; active u16; xte f64; reached u16 |
//! | 2   | Downlink      | frame bytes as received by the ground station                                         |
//! | 3   | Uplink        | frame bytes as put on the air by the ground station                                   |
//! | 4   | Command       | UTF-8 JSON of the operator command and its outcome                                    |
//! | 5   | MissionLoaded | mission_id u16; waypoint count u16                                                   |
//! | 6   | WaypointMiss  | waypoint index u16                                                                   |
//! | 7   | LinkSummary   | up sent, up dropped, down sent, down dropped: u64                                     |
//! | 8   | Quarantined   | frame bytes from an unregistered sys_id                                              |
//! | 9   | UploadResult  | mission_id u16; status u8 (0 accepted, 1 timeout, 2 rejected)                         |
//! | 10  | End           | empty                                                                                |
//!
//! `active` is 0xFFFF when no mission is loaded; `xte` is NaN off the
//! straight part of a leg. A log cut short replays up to its last complete
//! record.

use std::io::{self, Write};

pub const MAGIC: &[u8; 8] = b"ASVEVT01";
/// Largest payload a reader accepts; guards against garbage lengths.
pub const MAX_RECORD: usize = 1 << 20;

pub const NO_WAYPOINT: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub east: f64,
    pub north: f64,
    pub psi: f64,
    pub v_water: f64,
    pub fuel: f64,
    pub engine: u8,
    pub mode: u8,
    pub active: u16,
    pub xte: f64,
    pub reached: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UploadOutcome {
    Accepted,
    Timeout,
    Rejected,
}

impl UploadOutcome {
    pub fn code(self) -> u8 {
        match self {
            UploadOutcome::Accepted => 0,
            UploadOutcome::Timeout => 1,
            UploadOutcome::Rejected => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [
            UploadOutcome::Accepted,
            UploadOutcome::Timeout,
            UploadOutcome::Rejected,
        ]
        .get(c as usize)
        .copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            UploadOutcome::Accepted => "accepted",
            UploadOutcome::Timeout => "timeout",
            UploadOutcome::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Session(String),
    Track(TrackPoint),
    Downlink(Vec<u8>),
    Uplink(Vec<u8>),
    Command(String),
    MissionLoaded {
        mission_id: u16,
        count: u16,
    },
    WaypointMiss {
        index: u16,
    },
    LinkSummary {
        up_sent: u64,
        up_dropped: u64,
        down_sent: u64,
        down_dropped: u64,
    },
    Quarantined(Vec<u8>),
    UploadResult {
        mission_id: u16,
        outcome: UploadOutcome,
    },
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub sys_id: u8,
    pub body: Body,
}

impl Record {
    pub fn new(t: f64, sys_id: u8, body: Body) -> Self {
        Record { t, sys_id, body }
    }

    fn tag(&self) -> u8 {
        match self.body {
            Body::Session(_) => 0,
            Body::Track(_) => 1,
            Body::Downlink(_) => 2,
            Body::Uplink(_) => 3,
            Body::Command(_) => 4,
            Body::MissionLoaded { .. } => 5,
            Body::WaypointMiss { .. } => 6,
            Body::LinkSummary { .. } => 7,
            Body::Quarantined(_) => 8,
            Body::UploadResult { .. } => 9,
            Body::End => 10,
        }
    }

    /// Appends the length-prefixed record.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        let start = out.len();
        out.extend_from_slice(&[0; 4]);
        out.push(self.tag());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.push(self.sys_id);
        match &self.body {
            Body::Session(s) | Body::Command(s) => out.extend_from_slice(s.as_bytes()),
            Body::Downlink(b) | Body::Uplink(b) | Body::Quarantined(b) => out.extend_from_slice(b),
            Body::Track(p) => {
                for v in [p.east, p.north, p.psi, p.v_water, p.fuel] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                out.push(p.engine);
                out.push(p.mode);
                out.extend_from_slice(&p.active.to_le_bytes());
                out.extend_from_slice(&p.xte.to_le_bytes());
                out.extend_from_slice(&p.reached.to_le_bytes());
            }
            Body::MissionLoaded { mission_id, count } => {
                out.extend_from_slice(&mission_id.to_le_bytes());
                out.extend_from_slice(&count.to_le_bytes());
            }
            Body::WaypointMiss { index } => out.extend_from_slice(&index.to_le_bytes()),
            Body::LinkSummary {
                up_sent,
                up_dropped,
                down_sent,
                down_dropped,
            } => {
                for v in [up_sent, up_dropped, down_sent, down_dropped] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Body::UploadResult {
                mission_id,
                outcome,
            } => {
                out.extend_from_slice(&mission_id.to_le_bytes());
                out.push(outcome.code());
            }
            Body::End => {}
        }
        let len = (out.len() - start - 4) as u32;
        out[start..start + 4].copy_from_slice(&len.to_le_bytes());
    }

    pub fn decode(payload: &[u8]) -> Result<Record, LogError> {
        let mut r = Reader {
            buf: payload,
            pos: 0,
        };
        let tag = r.u8()?;
        let t = r.f64()?;
        let sys_id = r.u8()?;
        let body = match tag {
            0 => Body::Session(r.text()?),
            1 => Body::Track(TrackPoint {
                east: r.f64()?,
                north: r.f64()?,
                psi: r.f64()?,
                v_water: r.f64()?,
                fuel: r.f64()?,
                engine: r.u8()?,
                mode: r.u8()?,
                active: r.u16()?,
                xte: r.f64()?,
                reached: r.u16()?,
            }),
            2 => Body::Downlink(r.rest()),
            3 => Body::Uplink(r.rest()),
            4 => Body::Command(r.text()?),
            5 => Body::MissionLoaded {
                mission_id: r.u16()?,
                count: r.u16()?,
            },
            6 => Body::WaypointMiss { index: r.u16()? },
            7 => Body::LinkSummary {
                up_sent: r.u64()?,
                up_dropped: r.u64()?,
                down_sent: r.u64()?,
                down_dropped: r.u64()?,
            },
            8 => Body::Quarantined(r.rest()),
            9 => Body::UploadResult {
                mission_id: r.u16()?,
                outcome: UploadOutcome::from_code(r.u8()?)
                    .ok_or(LogError::Malformed("upload outcome"))?,
            },
            10 => Body::End,
            other => return Err(LogError::UnknownTag(other)),
        };
        if r.pos != payload.len() {
            return Err(LogError::Malformed("trailing bytes in record"));
        }
        Ok(Record { t, sys_id, body })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], LogError> {
        let s = self
            .buf
            .get(self.pos..self.pos + N)
            .ok_or(LogError::Malformed("record body too short"))?;
        self.pos += N;
        Ok(s.try_into().expect("slice has length N"))
    }
    fn u8(&mut self) -> Result<u8, LogError> {
        Ok(self.take::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16, LogError> {
        Ok(u16::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64, LogError> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64, LogError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn rest(&mut self) -> Vec<u8> {
        let v = self.buf[self.pos..].to_vec();
        self.pos = self.buf.len();
        v
    }
    fn text(&mut self) -> Result<String, LogError> {
        String::from_utf8(self.rest()).map_err(|_| LogError::Malformed("text is not UTF-8"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("not an event log")]
    BadMagic,
    #[error("unknown record tag {0}")]
    UnknownTag(u8),
    #[error("malformed record: {0}")]
    Malformed(&'static str),
}

/// Appends records to any byte sink.
pub struct EventWriter<W: Write> {
    sink: W,
    scratch: Vec<u8>,
    records: u64,
}

impl<W: Write> EventWriter<W> {
    pub fn new(mut sink: W) -> io::Result<Self> {
        sink.write_all(MAGIC)?;
        Ok(EventWriter {
            sink,
            scratch: Vec::with_capacity(256),
            records: 0,
        })
    }

    pub fn append(&mut self, rec: &Record) -> io::Result<()> {
        self.scratch.clear();
        rec.encode_into(&mut self.scratch);
        self.records += 1;
        self.sink.write_all(&self.scratch)
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.sink.flush()
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

/// Result of reading a whole log.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadLog {
    pub records: Vec<Record>,
    /// Why reading stopped early, if it did.
    pub warning: Option<String>,
}

/// Reads every complete record. A truncated tail or a corrupt record ends
/// the read with a warning instead of an error.
pub fn read_log(bytes: &[u8]) -> Result<ReadLog, LogError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(LogError::BadMagic);
    }
    let mut pos = MAGIC.len();
    let mut records = Vec::new();
    let mut warning = None;
    while pos < bytes.len() {
        let Some(len_bytes) = bytes.get(pos..pos + 4) else {
            warning = Some(format!("truncated record header at byte {pos}"));
            break;
        };
        let len = u32::from_le_bytes(len_bytes.try_into().expect("four bytes")) as usize;
        if len > MAX_RECORD {
            warning = Some(format!("implausible record length {len} at byte {pos}"));
            break;
        }
        let Some(payload) = bytes.get(pos + 4..pos + 4 + len) else {
            warning = Some(format!("truncated record at byte {pos}"));
            break;
        };
        match Record::decode(payload) {
            Ok(r) => records.push(r),
            Err(e) => {
                warning = Some(format!("{e} at byte {pos}"));
                break;
            }
        }
        pos += 4 + len;
    }
    Ok(ReadLog { records, warning })
}
