use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

/// Radio envelope between one vehicle and the shore station.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LinkModel {
    /// Line-of-sight limit, m. Nothing is delivered beyond it.
    pub max_range: f64,
    /// Drop probability inside the range.
    pub base_loss: f64,
    /// One-way delivery delay, s.
    pub latency: f64,
    pub seed: u64,
}

impl Default for LinkModel {
    fn default() -> Self {
        LinkModel {
            max_range: 2800.0,
            base_loss: 0.0,
            latency: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delivery {
    Delivered { after: f64 },
    Dropped,
}

impl LinkModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_range.is_finite() && self.max_range >= 0.0) {
            return Err(Error::InvalidParameter(
                "link max_range must be finite and non-negative",
            ));
        }
        if !(0.0..=1.0).contains(&self.base_loss) {
            return Err(Error::InvalidParameter(
                "link base_loss must be a probability",
            ));
        }
        if !(self.latency.is_finite() && self.latency >= 0.0) {
            return Err(Error::InvalidParameter(
                "link latency must be finite and non-negative",
            ));
        }
        Ok(())
    }

    /// Decides the fate of one frame sent over distance `d`. Exactly one
    /// uniform draw is consumed per call so the random stream does not
    /// depend on geometry.
    pub fn transmit<R: Rng + ?Sized>(&self, d: f64, rng: &mut R) -> Delivery {
        let roll: f64 = rng.random();
        if !(d <= self.max_range) || roll < self.base_loss {
            Delivery::Dropped
        } else {
            Delivery::Delivered {
                after: self.latency,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinkStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub bytes_sent: u64,
}

/// One direction of a simulated radio link: frames enter with a send time
/// and leave, in order, once their latency has elapsed.
#[derive(Debug, Clone)]
pub struct SimChannel<R> {
    model: LinkModel,
    rng: R,
    queue: VecDeque<(f64, Vec<u8>)>,
    stats: LinkStats,
    severed: bool,
}

impl<R: Rng> SimChannel<R> {
    pub fn new(model: LinkModel, rng: R) -> Self {
        SimChannel {
            model,
            rng,
            queue: VecDeque::new(),
            stats: LinkStats::default(),
            severed: false,
        }
    }

    pub fn model(&self) -> &LinkModel {
        &self.model
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    /// Cuts the link entirely (frames in flight are lost too).
    pub fn sever(&mut self) {
        self.severed = true;
        self.stats.dropped += self.queue.len() as u64;
        self.queue.clear();
    }

    pub fn restore(&mut self) {
        self.severed = false;
    }

    pub fn is_severed(&self) -> bool {
        self.severed
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    /// Returns whether the frame will be delivered.
    pub fn send(&mut self, now: f64, distance: f64, frame: Vec<u8>) -> bool {
        self.stats.sent += 1;
        self.stats.bytes_sent += frame.len() as u64;
        let fate = self.model.transmit(distance, &mut self.rng);
        match fate {
            Delivery::Delivered { after } if !self.severed => {
                self.queue.push_back((now + after, frame));
                true
            }
            _ => {
                self.stats.dropped += 1;
                false
            }
        }
    }

    /// Pops the oldest frame whose delivery time has come.
    pub fn receive(&mut self, now: f64) -> Option<Vec<u8>> {
        if self.queue.front().is_some_and(|(t, _)| *t <= now) {
            self.stats.delivered += 1;
            self.queue.pop_front().map(|(_, f)| f)
        } else {
            None
        }
    }
}
