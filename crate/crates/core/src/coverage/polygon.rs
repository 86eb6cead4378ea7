use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geo::{LocalPoint, Vector2};

/// A simple polygon in the local frame, stored counterclockwise without a
/// repeated closing vertex.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "Vec<LocalPoint>", into = "Vec<LocalPoint>")
)]
pub struct Polygon {
    pts: Vec<LocalPoint>,
}

impl TryFrom<Vec<LocalPoint>> for Polygon {
    type Error = Error;

    fn try_from(pts: Vec<LocalPoint>) -> Result<Self> {
        Polygon::new(pts)
    }
}

impl From<Polygon> for Vec<LocalPoint> {
    fn from(p: Polygon) -> Self {
        p.pts
    }
}

fn signed_area(pts: &[LocalPoint]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        s += a.east * b.north - b.east * a.north;
    }
    0.5 * s
}

fn orient(a: LocalPoint, b: LocalPoint, c: LocalPoint) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: LocalPoint, b: LocalPoint, p: LocalPoint) -> bool {
    p.east >= a.east.min(b.east)
        && p.east <= a.east.max(b.east)
        && p.north >= a.north.min(b.north)
        && p.north <= a.north.max(b.north)
}

fn segments_intersect(a: LocalPoint, b: LocalPoint, c: LocalPoint, d: LocalPoint) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

impl Polygon {
    /// Validates and normalizes a boundary. An explicit closing vertex equal
    /// to the first is dropped; clockwise input is reversed.
    pub fn new(mut pts: Vec<LocalPoint>) -> Result<Self> {
        if pts.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidPolygon("vertices must be finite"));
        }
        if pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::InvalidPolygon(
                "polygon needs at least three distinct vertices",
            ));
        }
        let area = signed_area(&pts);
        let scale = pts
            .iter()
            .map(|p| p.east.abs().max(p.north.abs()))
            .fold(1.0, f64::max);
        if area.abs() <= 1e-12 * scale * scale {
            return Err(Error::InvalidPolygon("polygon has zero area"));
        }
        if !is_simple(&pts) {
            return Err(Error::InvalidPolygon("polygon edges cross"));
        }
        if area < 0.0 {
            pts.reverse();
        }
        Ok(Polygon { pts })
    }

    /// Builds from already-clipped vertices; degenerate results give `None`.
    fn from_clipped(pts: Vec<LocalPoint>) -> Option<Self> {
        if pts.len() < 3 || signed_area(&pts).abs() <= 1e-12 {
            return None;
        }
        let mut pts = pts;
        if signed_area(&pts) < 0.0 {
            pts.reverse();
        }
        Some(Polygon { pts })
    }

    pub fn vertices(&self) -> &[LocalPoint] {
        &self.pts
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.pts)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (LocalPoint, LocalPoint)> + '_ {
        let n = self.pts.len();
        (0..n).map(move |i| (self.pts[i], self.pts[(i + 1) % n]))
    }

    /// Even-odd point containment; points on the boundary may fall either way.
    pub fn contains(&self, p: LocalPoint) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.north > p.north) != (b.north > p.north) {
                let x = a.east + (p.north - a.north) * (b.east - a.east) / (b.north - a.north);
                if p.east < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// `(min, max)` of `p · dir` over the vertices.
    pub fn extent(&self, dir: Vector2) -> (f64, f64) {
        self.pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let s = p.east * dir.x + p.north * dir.y;
                (lo.min(s), hi.max(s))
            })
    }

    pub fn bbox(&self) -> (LocalPoint, LocalPoint) {
        let (w, e) = self.extent(Vector2::new(1.0, 0.0));
        let (s, n) = self.extent(Vector2::new(0.0, 1.0));
        (LocalPoint::new(w, s), LocalPoint::new(e, n))
    }

    pub fn is_convex(&self) -> bool {
        let n = self.pts.len();
        (0..n).all(|i| orient(self.pts[i], self.pts[(i + 1) % n], self.pts[(i + 2) % n]) >= -1e-12)
    }

    /// Keeps the part with `p · dir <= c` (Sutherland–Hodgman against one
    /// half-plane). Concave inputs may produce zero-width bridges but the
    /// area is exact.
    pub fn clip_half_plane(&self, dir: Vector2, c: f64) -> Option<Polygon> {
        let side = |p: LocalPoint| p.east * dir.x + p.north * dir.y - c;
        let mut out = Vec::with_capacity(self.pts.len() + 2);
        for (a, b) in self.edges() {
            let (sa, sb) = (side(a), side(b));
            if sa <= 0.0 {
                out.push(a);
            }
            if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
                let t = sa / (sa - sb);
                out.push(a + (b - a) * t);
            }
        }
        out.dedup();
        if out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        Polygon::from_clipped(out)
    }

    /// The slab `lo <= p · dir <= hi`.
    pub fn clip_band(&self, dir: Vector2, lo: f64, hi: f64) -> Option<Polygon> {
        self.clip_half_plane(dir, hi)?
            .clip_half_plane(dir * -1.0, -lo)
    }

    pub fn translated(&self, by: Vector2) -> Polygon {
        Polygon {
            pts: self.pts.iter().map(|p| *p + by).collect(),
        }
    }

    /// Rotates clockwise (compass sense) by `angle` radians about `center`.
    pub fn rotated(&self, center: LocalPoint, angle: f64) -> Polygon {
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        Polygon {
            pts: self
                .pts
                .iter()
                .map(|p| {
                    let d = *p - center;
                    center + Vector2::new(d.x * c + d.y * s, -d.x * s + d.y * c)
                })
                .collect(),
        }
    }
}

fn is_simple(pts: &[LocalPoint]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in i + 1..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    // a zero-length turn back along the previous edge is also a crossing
    (0..n).all(|i| {
        let (a, b, c) = (pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
        orient(a, b, c) != 0.0 || (b - a).dot(c - b) > 0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn p(e: f64, n: f64) -> LocalPoint {
        LocalPoint::new(e, n)
    }

    fn square(s: f64) -> Polygon {
        Polygon::new(vec![p(0.0, 0.0), p(s, 0.0), p(s, s), p(0.0, s)]).unwrap()
    }

    #[test]
    fn area_and_orientation() {
        let cw = Polygon::new(vec![
            p(0.0, 0.0),
            p(0.0, 2.0),
            p(3.0, 2.0),
            p(3.0, 0.0),
            p(0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(cw.area(), 6.0);
        assert_eq!(cw.vertices().len(), 4);
        assert_eq!(cw.perimeter(), 10.0);
    }

    #[test]
    fn rejects_bad_polygons() {
        assert!(Polygon::new(vec![p(0.0, 0.0), p(1.0, 1.0)]).is_err());
        assert!(Polygon::new(vec![p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)]).is_err());
        let bowtie = vec![p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert!(Polygon::new(bowtie).is_err());
        assert!(Polygon::new(vec![p(0.0, 0.0), p(f64::NAN, 1.0), p(1.0, 0.0)]).is_err());
    }

    #[test]
    fn clipping_preserves_area() {
        let sq = square(10.0);
        let east = Vector2::new(1.0, 0.0);
        let left = sq.clip_half_plane(east, 4.0).unwrap();
        let right = sq.clip_half_plane(east * -1.0, -4.0).unwrap();
        assert!((left.area() - 40.0).abs() < 1e-12);
        assert!((right.area() - 60.0).abs() < 1e-12);
        assert!(sq.clip_half_plane(east, -1.0).is_none());
        let band = sq.clip_band(east, 2.0, 5.0).unwrap();
        assert!((band.area() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn containment() {
        let l = Polygon::new(vec![
            p(0.0, 0.0),
            p(2.0, 0.0),
            p(2.0, 1.0),
            p(1.0, 1.0),
            p(1.0, 2.0),
            p(0.0, 2.0),
        ])
        .unwrap();
        assert!(l.contains(p(0.5, 1.5)));
        assert!(!l.contains(p(1.5, 1.5)));
        assert!(!l.is_convex());
        assert!(square(1.0).is_convex());
    }

    #[test]
    fn rotation_keeps_area() {
        let r = square(10.0).rotated(p(5.0, 5.0), 0.7);
        assert!((r.area() - 100.0).abs() < 1e-9);
    }
}
