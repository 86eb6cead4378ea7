//! Shortest bounded-curvature paths between two poses.
//!
//! Internally the solver works in the usual mathematical frame: x east,
//! y north, angle counterclockwise from east, so a left (L) arc turns to
//! port and a right (R) arc turns to starboard.

use core::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::geo::{Heading, LocalPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose {
    pub pos: LocalPoint,
    pub heading: Heading,
}

impl Pose {
    pub fn new(pos: LocalPoint, heading: Heading) -> Self {
        Pose { pos, heading }
    }

    fn theta(&self) -> f64 {
        FRAC_PI_2 - self.heading.radians()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PathKind {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Left,
    Straight,
    Right,
}

impl PathKind {
    pub const ALL: [PathKind; 6] = [
        PathKind::Lsl,
        PathKind::Rsr,
        PathKind::Lsr,
        PathKind::Rsl,
        PathKind::Rlr,
        PathKind::Lrl,
    ];

    pub fn segments(self) -> [Segment; 3] {
        use Segment::*;
        match self {
            PathKind::Lsl => [Left, Straight, Left],
            PathKind::Rsr => [Right, Straight, Right],
            PathKind::Lsr => [Left, Straight, Right],
            PathKind::Rsl => [Right, Straight, Left],
            PathKind::Rlr => [Right, Left, Right],
            PathKind::Lrl => [Left, Right, Left],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PathKind::Lsl => "LSL",
            PathKind::Rsr => "RSR",
            PathKind::Lsr => "LSR",
            PathKind::Rsl => "RSL",
            PathKind::Rlr => "RLR",
            PathKind::Lrl => "LRL",
        }
    }
}

fn mod2pi(a: f64) -> f64 {
    let r = a - TAU * libm::floor(a / TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Normalized segment lengths `(t, p, q)` for one class, in units of the
/// turning radius, or `None` when the class has no solution.
pub fn class_lengths(kind: PathKind, alpha: f64, beta: f64, d: f64) -> Option<[f64; 3]> {
    let (sa, ca) = (libm::sin(alpha), libm::cos(alpha));
    let (sb, cb) = (libm::sin(beta), libm::cos(beta));
    let c_ab = libm::cos(alpha - beta);
    let atan2 = libm::atan2;
    match kind {
        PathKind::Lsl => {
            let p2 = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sa - sb);
            if p2 < 0.0 {
                return None;
            }
            let tmp = atan2(cb - ca, d + sa - sb);
            Some([mod2pi(tmp - alpha), libm::sqrt(p2), mod2pi(beta - tmp)])
        }
        PathKind::Rsr => {
            let p2 = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sb - sa);
            if p2 < 0.0 {
                return None;
            }
            let tmp = atan2(ca - cb, d - sa + sb);
            Some([mod2pi(alpha - tmp), libm::sqrt(p2), mod2pi(tmp - beta)])
        }
        PathKind::Lsr => {
            let p2 = -2.0 + d * d + 2.0 * c_ab + 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = libm::sqrt(p2);
            let tmp = atan2(-ca - cb, d + sa + sb) - atan2(-2.0, p);
            Some([mod2pi(tmp - alpha), p, mod2pi(tmp - mod2pi(beta))])
        }
        PathKind::Rsl => {
            let p2 = -2.0 + d * d + 2.0 * c_ab - 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = libm::sqrt(p2);
            let tmp = atan2(ca + cb, d - sa - sb) - atan2(2.0, p);
            Some([mod2pi(alpha - tmp), p, mod2pi(beta - tmp)])
        }
        PathKind::Rlr => {
            let c = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0;
            if c.abs() > 1.0 {
                return None;
            }
            let p = mod2pi(TAU - libm::acos(c));
            let t = mod2pi(alpha - atan2(ca - cb, d - sa + sb) + p / 2.0);
            Some([t, p, mod2pi(alpha - beta - t + p)])
        }
        PathKind::Lrl => {
            let c = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0;
            if c.abs() > 1.0 {
                return None;
            }
            let p = mod2pi(TAU - libm::acos(c));
            let t = mod2pi(-alpha - atan2(ca - cb, d + sa - sb) + p / 2.0);
            Some([t, p, mod2pi(mod2pi(beta) - alpha - t + p)])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DubinsPath {
    pub start: Pose,
    pub kind: PathKind,
    /// Segment lengths, m.
    pub lengths: [f64; 3],
    pub radius: f64,
}

impl DubinsPath {
    pub fn length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Pose after travelling `s` meters along the path (clamped to its ends).
    pub fn sample(&self, s: f64) -> Pose {
        let s = s.clamp(0.0, self.length());
        let mut x = self.start.pos.east;
        let mut y = self.start.pos.north;
        let mut th = self.start.theta();
        let mut left = s;
        for (seg, len) in self.kind.segments().into_iter().zip(self.lengths) {
            let step = left.min(len);
            let r = self.radius;
            match seg {
                Segment::Straight => {
                    x += step * libm::cos(th);
                    y += step * libm::sin(th);
                }
                Segment::Left => {
                    let dth = step / r;
                    x += r * (libm::sin(th + dth) - libm::sin(th));
                    y += r * (libm::cos(th) - libm::cos(th + dth));
                    th += dth;
                }
                Segment::Right => {
                    let dth = step / r;
                    x += r * (libm::sin(th) - libm::sin(th - dth));
                    y += r * (libm::cos(th - dth) - libm::cos(th));
                    th -= dth;
                }
            }
            left -= step;
            if left <= 0.0 {
                break;
            }
        }
        Pose {
            pos: LocalPoint::new(x, y),
            heading: Heading::normalized(FRAC_PI_2 - th),
        }
    }

    /// The path's own end pose (matches the requested goal to rounding).
    pub fn end(&self) -> Pose {
        self.sample(self.length())
    }
}

/// Shortest of the six path classes from `a` to `b` with turning radius
/// `r_min`.
pub fn dubins_connect(a: Pose, b: Pose, r_min: f64) -> Result<DubinsPath> {
    if !(r_min.is_finite() && r_min > 0.0) {
        return Err(Error::InvalidParameter("turning radius must be positive"));
    }
    if !(a.pos.is_finite() && b.pos.is_finite()) {
        return Err(Error::NonFinite("pose"));
    }
    let dx = b.pos.east - a.pos.east;
    let dy = b.pos.north - a.pos.north;
    let d = libm::hypot(dx, dy) / r_min;
    let phi = if d > 0.0 { libm::atan2(dy, dx) } else { 0.0 };
    let alpha = mod2pi(a.theta() - phi);
    let beta = mod2pi(b.theta() - phi);
    let mut best: Option<(PathKind, [f64; 3])> = None;
    for kind in PathKind::ALL {
        if let Some(l) = class_lengths(kind, alpha, beta, d) {
            let total = l[0] + l[1] + l[2];
            if best.is_none_or(|(_, b)| total < b[0] + b[1] + b[2]) {
                best = Some((kind, l));
            }
        }
    }
    // CSC classes always admit a solution for at least one of LSL/RSR
    let (kind, l) = best.ok_or(Error::InvalidParameter("no path class admits a solution"))?;
    Ok(DubinsPath {
        start: a,
        kind,
        lengths: [l[0] * r_min, l[1] * r_min, l[2] * r_min],
        radius: r_min,
    })
}

/// Length of a single semicircular turn between antiparallel transects
/// spaced `2·r`.
pub fn semicircle(r: f64) -> f64 {
    PI * r
}
