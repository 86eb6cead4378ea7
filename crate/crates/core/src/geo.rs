//! Coordinate frames and angle arithmetic.
//!
//! Conventions used throughout the crate:
//!
//! * Headings are radians measured clockwise from true north (marine
//!   convention), normalized to `[0, 2π)`.
//! * The local frame is an east/north tangent plane anchored at a fixed
//!   scenario origin, built with an equirectangular approximation.
//! * World-frame vectors are `(east, north)`. Boat-frame vectors are
//!   `(forward, starboard)`.

use core::f64::consts::{PI, TAU};
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Mean Earth radius used by the tangent-plane approximation.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Largest latitude or longitude offset from the origin accepted by the
/// tangent-plane conversions, in degrees.
pub const LOCAL_WINDOW_DEG: f64 = 1.0;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite("angle"));
    }
    Ok(wrap_angle_unchecked(a))
}

/// [`wrap_angle`] for values already known to be finite.
pub(crate) fn wrap_angle_unchecked(a: f64) -> f64 {
    // IEEE remainder is exact, so the only rounding left is in deciding
    // which side of the ±π seam a value that is within ulps of it lands on.
    let r = libm::remainder(a, TAU);
    let seam = 4.0 * f64::EPSILON * a.abs().max(1.0);
    if r <= -PI + seam {
        (r + TAU).min(PI)
    } else {
        r
    }
}

/// A heading in radians clockwise from true north, always in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "f64", into = "f64"))]
pub struct Heading(f64);

impl Heading {
    pub const NORTH: Heading = Heading(0.0);
    pub const EAST: Heading = Heading(PI / 2.0);
    pub const SOUTH: Heading = Heading(PI);
    pub const WEST: Heading = Heading(3.0 * PI / 2.0);

    pub fn new(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::NonFinite("heading"));
        }
        Ok(Self::normalized(radians))
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    pub(crate) fn normalized(radians: f64) -> Self {
        let mut h = libm::fmod(radians, TAU);
        if h < 0.0 {
            h += TAU;
        }
        if h >= TAU {
            h = 0.0;
        }
        Heading(h)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// Signed shortest rotation from `self` to `target`, in `(-π, π]`.
    /// Positive values are clockwise (to starboard).
    pub fn error_to(self, target: Heading) -> f64 {
        wrap_angle_unchecked(target.0 - self.0)
    }

    /// Returns the heading rotated by `delta` radians (clockwise positive).
    pub fn rotated(self, delta: f64) -> Heading {
        Self::normalized(self.0 + delta)
    }

    /// Unit vector pointing along the heading, world frame.
    pub fn unit(self) -> Vector2 {
        Vector2::new(self.0.sin(), self.0.cos())
    }
}

impl TryFrom<f64> for Heading {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Heading::new(v)
    }
}

impl From<Heading> for f64 {
    fn from(h: Heading) -> f64 {
        h.0
    }
}

/// A WGS84 latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGeoPoint {
                lat: self.lat,
                lon: self.lon,
            })
        }
    }
}

/// A point in the local east/north tangent plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalPoint {
    pub east: f64,
    pub north: f64,
}

impl LocalPoint {
    pub const ORIGIN: LocalPoint = LocalPoint {
        east: 0.0,
        north: 0.0,
    };

    pub const fn new(east: f64, north: f64) -> Self {
        LocalPoint { east, north }
    }

    pub fn distance(self, other: LocalPoint) -> f64 {
        (other - self).norm()
    }

    /// Bearing from `self` towards `other`. Coincident points give north.
    pub fn bearing_to(self, other: LocalPoint) -> Heading {
        let d = other - self;
        if d.x == 0.0 && d.y == 0.0 {
            return Heading::NORTH;
        }
        Heading::normalized(d.x.atan2(d.y))
    }

    pub fn is_finite(self) -> bool {
        self.east.is_finite() && self.north.is_finite()
    }
}

impl Sub for LocalPoint {
    type Output = Vector2;
    fn sub(self, rhs: LocalPoint) -> Vector2 {
        Vector2::new(self.east - rhs.east, self.north - rhs.north)
    }
}

impl Add<Vector2> for LocalPoint {
    type Output = LocalPoint;
    fn add(self, rhs: Vector2) -> LocalPoint {
        LocalPoint::new(self.east + rhs.x, self.north + rhs.y)
    }
}

impl AddAssign<Vector2> for LocalPoint {
    fn add_assign(&mut self, rhs: Vector2) {
        self.east += rhs.x;
        self.north += rhs.y;
    }
}

/// A planar vector. In the world frame `x` is east and `y` is north; in the
/// boat frame `x` is forward and `y` is starboard.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vector2 {
    pub x: f64,
    pub y: f64,
}

impl Vector2 {
    pub const ZERO: Vector2 = Vector2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vector2 { x, y }
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn dot(self, other: Vector2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vector2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Scales the vector down so that its norm does not exceed `limit`.
    pub fn clamp_norm(self, limit: f64) -> Vector2 {
        let n = self.norm();
        if n > limit && n > 0.0 {
            self * (limit / n)
        } else {
            self
        }
    }
}

impl Add for Vector2 {
    type Output = Vector2;
    fn add(self, rhs: Vector2) -> Vector2 {
        Vector2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vector2 {
    type Output = Vector2;
    fn sub(self, rhs: Vector2) -> Vector2 {
        Vector2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vector2 {
    type Output = Vector2;
    fn mul(self, k: f64) -> Vector2 {
        Vector2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vector2 {
    type Output = Vector2;
    fn neg(self) -> Vector2 {
        Vector2::new(-self.x, -self.y)
    }
}

/// Projects `p` into the tangent plane anchored at `origin`.
///
/// Both offsets must be under [`LOCAL_WINDOW_DEG`]; beyond that the
/// equirectangular approximation is no longer trusted.
pub fn geo_to_local(origin: GeoPoint, p: GeoPoint) -> Result<LocalPoint> {
    origin.validate()?;
    p.validate()?;
    let dlat = p.lat - origin.lat;
    let dlon = p.lon - origin.lon;
    if dlat.abs() >= LOCAL_WINDOW_DEG || dlon.abs() >= LOCAL_WINDOW_DEG {
        return Err(Error::OutsideLocalWindow);
    }
    let east = dlon.to_radians() * EARTH_RADIUS_M * origin.lat.to_radians().cos();
    let north = dlat.to_radians() * EARTH_RADIUS_M;
    Ok(LocalPoint::new(east, north))
}

/// Inverse of [`geo_to_local`].
pub fn local_to_geo(origin: GeoPoint, p: LocalPoint) -> Result<GeoPoint> {
    origin.validate()?;
    if !p.is_finite() {
        return Err(Error::NonFinite("local point"));
    }
    let dlat = (p.north / EARTH_RADIUS_M).to_degrees();
    let dlon = (p.east / (EARTH_RADIUS_M * origin.lat.to_radians().cos())).to_degrees();
    if !(dlat.abs() < LOCAL_WINDOW_DEG && dlon.abs() < LOCAL_WINDOW_DEG) {
        return Err(Error::OutsideLocalWindow);
    }
    GeoPoint::new(origin.lat + dlat, origin.lon + dlon)
}

/// Rotates a boat-frame `(forward, starboard)` vector into the world frame.
pub fn rotate_boat_to_world(rel: Vector2, psi: Heading) -> Vector2 {
    let (s, c) = psi.radians().sin_cos();
    Vector2::new(rel.x * s + rel.y * c, rel.x * c - rel.y * s)
}

/// Rotates a world-frame `(east, north)` vector into the boat frame.
///
/// The boat-to-world rotation is an involution (a reflection composed with a
/// reflection), so this applies the same matrix.
pub fn rotate_world_to_boat(world: Vector2, psi: Heading) -> Vector2 {
    let (s, c) = psi.radians().sin_cos();
    Vector2::new(world.x * s + world.y * c, world.x * c - world.y * s)
}

/// Converts a velocity measured relative to the moving boat into the world
/// frame: `v_ground + R(psi)·rel`.
///
/// `rel` is `(forward, starboard)`; `v_ground` is the boat's own ground
/// velocity `(east, north)`.
pub fn boat_to_world(rel: Vector2, psi: Heading, v_ground: Vector2) -> Result<Vector2> {
    if !rel.is_finite() || !v_ground.is_finite() {
        return Err(Error::NonFinite("velocity"));
    }
    Ok(v_ground + rotate_boat_to_world(rel, psi))
}
