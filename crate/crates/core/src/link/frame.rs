//! Frame layout:
//!
//! ```text
//! offset  0     1       2    3       4       5 .. 5+len   5+len .. 7+len
//!         0xA5  len     seq  sys_id  msg_id  payload      crc16 (LE)
//! ```
//!
//! The CRC covers bytes `1 .. 5 + len` (length through payload).

use alloc::vec::Vec;

use super::crc::crc16;
use super::message::{Message, MAX_PAYLOAD};
use super::FrameError;

pub const MAGIC: u8 = 0xA5;
pub const HEADER_LEN: usize = 5;
/// Header plus CRC.
pub const OVERHEAD: usize = HEADER_LEN + 2;
pub const MAX_FRAME: usize = MAX_PAYLOAD + OVERHEAD;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Frame {
    pub seq: u8,
    pub sys_id: u8,
    pub msg: Message,
}

pub fn encode(msg: &Message, seq: u8, sys_id: u8) -> Result<Vec<u8>, FrameError> {
    let mut out = Vec::with_capacity(OVERHEAD + msg.payload_len());
    encode_into(msg, seq, sys_id, &mut out)?;
    Ok(out)
}

/// Appends one encoded frame to `out`. On error `out` is left unchanged.
pub fn encode_into(
    msg: &Message,
    seq: u8,
    sys_id: u8,
    out: &mut Vec<u8>,
) -> Result<(), FrameError> {
    let start = out.len();
    out.extend_from_slice(&[MAGIC, 0, seq, sys_id, msg.msg_id()]);
    if let Err(e) = msg.write_payload(out) {
        out.truncate(start);
        return Err(e);
    }
    let len = out.len() - start - HEADER_LEN;
    out[start + 1] = len as u8;
    let crc = crc16(&out[start + 1..]);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(())
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn decode(bytes: &[u8]) -> Result<Frame, FrameError> {
    let (&magic, _) = bytes.split_first().ok_or(FrameError::Truncated)?;
    if magic != MAGIC {
        return Err(FrameError::BadMagic);
    }
    if bytes.len() < OVERHEAD {
        return Err(FrameError::Truncated);
    }
    let total = bytes[1] as usize + OVERHEAD;
    if bytes.len() < total {
        return Err(FrameError::Truncated);
    }
    if bytes.len() > total {
        return Err(FrameError::BadLength);
    }
    check_crc(bytes)?;
    Message::read_payload(bytes[4], &bytes[HEADER_LEN..total - 2]).map(|msg| Frame {
        seq: bytes[2],
        sys_id: bytes[3],
        msg,
    })
}

fn check_crc(frame: &[u8]) -> Result<(), FrameError> {
    let n = frame.len();
    let stored = u16::from_le_bytes([frame[n - 2], frame[n - 1]]);
    if crc16(&frame[1..n - 2]) == stored {
        Ok(())
    } else {
        Err(FrameError::CrcMismatch)
    }
}

/// Counters kept by [`FrameDecoder`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecoderStats {
    pub frames: u64,
    /// Bytes discarded while hunting for a frame start.
    pub skipped: u64,
    pub crc_errors: u64,
    /// CRC-valid frames whose message could not be decoded.
    pub invalid: u64,
}

/// Incremental decoder for a byte stream carrying back-to-back frames,
/// possibly interleaved with garbage.
#[derive(Debug, Clone, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    stats: DecoderStats,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> DecoderStats {
        self.stats
    }

    /// Bytes held while waiting for the rest of a frame.
    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Returns the next complete, CRC-valid, decodable frame.
    pub fn next_frame(&mut self) -> Option<Frame> {
        loop {
            let start = self.buf.iter().position(|&b| b == MAGIC);
            let skip = start.unwrap_or(self.buf.len());
            self.discard(skip);
            if self.buf.len() < 2 {
                return None;
            }
            let total = self.buf[1] as usize + OVERHEAD;
            if self.buf.len() < total {
                // a corrupted length byte must not stall frames already received
                {
                    let at = self.later_complete_frame()?;
                    self.discard(at);
                    continue;
                }
            }
            if check_crc(&self.buf[..total]).is_err() {
                self.stats.crc_errors += 1;
                self.discard(1);
                continue;
            }
            let decoded = Message::read_payload(self.buf[4], &self.buf[HEADER_LEN..total - 2]);
            let (seq, sys_id) = (self.buf[2], self.buf[3]);
            self.buf.drain(..total);
            match decoded {
                Ok(msg) => {
                    self.stats.frames += 1;
                    return Some(Frame { seq, sys_id, msg });
                }
                Err(_) => self.stats.invalid += 1,
            }
        }
    }

    fn later_complete_frame(&self) -> Option<usize> {
        (1..self.buf.len()).find(|&i| {
            let rest = &self.buf[i..];
            rest[0] == MAGIC
                && rest.len() >= OVERHEAD
                && rest.len() >= rest[1] as usize + OVERHEAD
                && check_crc(&rest[..rest[1] as usize + OVERHEAD]).is_ok()
        })
    }

    fn discard(&mut self, n: usize) {
        self.stats.skipped += n as u64;
        self.buf.drain(..n);
    }
}

impl Iterator for FrameDecoder {
    type Item = Frame;

    fn next(&mut self) -> Option<Frame> {
        self.next_frame()
    }
}
