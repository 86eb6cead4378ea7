//! Reference implementations used as test oracles. None of them share code
//! with the library.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

/// CRC-16/CCITT-FALSE, one bit at a time.
pub fn crc16_bitwise(data: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &byte in data {
        for bit in (0..8).rev() {
            let input = (byte >> bit) & 1 == 1;
            let top = crc & 0x8000 != 0;
            crc <<= 1;
            if top != input {
                crc ^= 0x1021;
            }
        }
    }
    crc
}

/// `v_ground + R(psi) rel` written out longhand: a boat at compass heading
/// psi has its bow along (sin, cos) and starboard along (cos, -sin).
pub fn boat_to_world(fwd: f64, stbd: f64, psi: f64, vg: (f64, f64)) -> (f64, f64) {
    let bow = (psi.sin(), psi.cos());
    let starboard = (psi.cos(), -psi.sin());
    (
        vg.0 + fwd * bow.0 + stbd * starboard.0,
        vg.1 + fwd * bow.1 + stbd * starboard.1,
    )
}

fn wrap_pos(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > TAU - 1e-12 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OraclePose {
    pub x: f64,
    pub y: f64,
    /// Compass heading, radians clockwise from north.
    pub psi: f64,
}

/// +1 turns to starboard (clockwise), -1 to port.
fn turn_center(p: OraclePose, side: f64, r: f64) -> (f64, f64) {
    (p.x + side * r * p.psi.cos(), p.y - side * r * p.psi.sin())
}

fn point_on_circle(c: (f64, f64), side: f64, r: f64, psi: f64) -> (f64, f64) {
    (c.0 - side * r * psi.cos(), c.1 + side * r * psi.sin())
}

fn heading_at(c: (f64, f64), p: (f64, f64), side: f64, r: f64) -> f64 {
    // starboard unit vector points from the boat to a clockwise center
    let sx = (c.0 - p.0) / (side * r);
    let sy = (c.1 - p.1) / (side * r);
    (-sy).atan2(sx)
}

/// Arc then straight then arc. The first arc angle is found by scanning for
/// sign changes of the tangency condition and bisecting.
fn csc(a: OraclePose, b: OraclePose, r: f64, s1: f64, s2: f64) -> Option<f64> {
    let c1 = turn_center(a, s1, r);
    let c2 = turn_center(b, s2, r);
    let state = |t1: f64| {
        let psi = a.psi + s1 * t1;
        let p1 = point_on_circle(c1, s1, r, psi);
        let q = point_on_circle(c2, s2, r, psi);
        let u = (psi.sin(), psi.cos());
        let d = (q.0 - p1.0, q.1 - p1.1);
        (u.0 * d.1 - u.1 * d.0, u.0 * d.0 + u.1 * d.1, psi)
    };
    let n = 8192;
    let mut best: Option<f64> = None;
    let mut consider = |t1: f64| {
        let (_, s, psi) = state(t1);
        if s < -1e-9 {
            return;
        }
        let t3 = wrap_pos(s2 * (b.psi - psi));
        let len = r * t1 + s.max(0.0) + r * t3;
        if best.is_none_or(|x| len < x) {
            best = Some(len);
        }
    };
    let mut prev = state(0.0).0;
    if prev == 0.0 {
        consider(0.0);
    }
    for k in 1..=n {
        let hi_t = TAU * k as f64 / n as f64;
        let cur = state(hi_t).0;
        if cur == 0.0 {
            consider(hi_t);
        } else if prev != 0.0 && (prev < 0.0) != (cur < 0.0) {
            let (mut lo, mut hi) = (TAU * (k - 1) as f64 / n as f64, hi_t);
            let flo = prev;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = state(mid).0;
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            consider(wrap_pos(0.5 * (lo + hi)));
        }
        prev = cur;
    }
    best
}

/// Three arcs; the middle circle touches both end circles, found by circle
/// intersection.
fn ccc(a: OraclePose, b: OraclePose, r: f64, s: f64) -> Option<f64> {
    let c1 = turn_center(a, s, r);
    let c3 = turn_center(b, s, r);
    let (dx, dy) = (c3.0 - c1.0, c3.1 - c1.1);
    let d = dx.hypot(dy);
    if d > 4.0 * r || d < 1e-12 {
        return None;
    }
    let h = (4.0 * r * r - d * d / 4.0).max(0.0).sqrt();
    let mid = (c1.0 + dx / 2.0, c1.1 + dy / 2.0);
    let perp = (-dy / d, dx / d);
    let mut best: Option<f64> = None;
    for sign in [1.0, -1.0] {
        let c2 = (mid.0 + sign * h * perp.0, mid.1 + sign * h * perp.1);
        let t1p = ((c1.0 + c2.0) / 2.0, (c1.1 + c2.1) / 2.0);
        let t2p = ((c2.0 + c3.0) / 2.0, (c2.1 + c3.1) / 2.0);
        let psi1 = heading_at(c1, t1p, s, r);
        let psi2 = heading_at(c2, t2p, -s, r);
        let a1 = wrap_pos(s * (psi1 - a.psi));
        let a2 = wrap_pos(-s * (psi2 - psi1));
        let a3 = wrap_pos(s * (b.psi - psi2));
        let len = r * (a1 + a2 + a3);
        if best.is_none_or(|x| len < x) {
            best = Some(len);
        }
    }
    best
}

/// Shortest bounded-curvature path length over all six word types.
pub fn dubins_length(a: OraclePose, b: OraclePose, r: f64) -> f64 {
    let mut cands = Vec::new();
    for (s1, s2) in [(-1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (1.0, -1.0)] {
        cands.extend(csc(a, b, r, s1, s2));
    }
    for s in [-1.0, 1.0] {
        cands.extend(ccc(a, b, r, s));
    }
    cands.into_iter().fold(f64::INFINITY, f64::min)
}

pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}
